use neurosym::engine::{
    euclidean_distance, evaluate, evaluate_traced, Environment, EvalError, EvalErrorKind, Evaluator, LimitKind, Limits,
    Value,
};
use neurosym::lang::parse_program;

fn run_with(src: &str, limits: &Limits) -> Result<Value, EvalError> {
    let program = parse_program(src).expect("program parses");
    evaluate(&program, &mut Environment::new(), limits)
}

fn run(src: &str) -> Result<Value, EvalError> {
    run_with(src, &Limits::default())
}

fn kind(src: &str) -> EvalErrorKind {
    run(src).expect_err("evaluation should fail").kind
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/programs/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn circle_count_program() {
    assert_eq!(run(&fixture("circles.wl")), Ok(Value::int(2)));
}

#[test]
fn midsegment_program_is_exact() {
    assert_eq!(run(&fixture("midsegment.wl")), Ok(Value::int(5)));
}

#[test]
fn fraction_program_picks_option() {
    assert_eq!(run(&fixture("fraction.wl")), Ok(Value::str("A")));
}

#[test]
fn fraction_without_match_is_non_ground() {
    let src = fixture("fraction.wl").replace("\"A\" -> 3/5", "\"A\" -> 4/5");
    assert_eq!(kind(&src), EvalErrorKind::NonGroundResult);
}

#[test]
fn division_by_zero() {
    assert_eq!(kind("1/0"), EvalErrorKind::DivisionByZero);
    assert_eq!(kind("Mod[3, 0]"), EvalErrorKind::DivisionByZero);
}

#[test]
fn exact_arithmetic() {
    assert_eq!(run("1/3 + 1/6"), Ok(Value::rational(1, 2)));
    assert_eq!(run("2^100").unwrap().to_string(), "1267650600228229401496703205376");
    assert_eq!(run("(4/9)^(1/2)"), Ok(Value::rational(2, 3)));
    assert_eq!(run("Sqrt[16/25]"), Ok(Value::rational(4, 5)));
    assert_eq!(run("Sqrt[2]"), Ok(Value::Real(std::f64::consts::SQRT_2)));
    assert_eq!(run("N[1/4]"), Ok(Value::Real(0.25)));
    assert_eq!(run("0.5 + 1/2"), Ok(Value::Real(1.0)));
    assert_eq!(run("-7 - 3"), Ok(Value::int(-10)));
    assert_eq!(run("Mod[-7, 3]"), Ok(Value::int(2)));
    assert_eq!(run("Round[5/2]"), Ok(Value::int(2)));
    assert_eq!(run("{Floor[-3/2], Ceiling[-3/2], Abs[-3/2]}").unwrap().to_string(), "{-2, -1, 3/2}");
    assert_eq!(run("{GCD[12, 18], LCM[4, 6]}").unwrap().to_string(), "{6, 12}");
}

#[test]
fn huge_exact_numbers_hit_size_limit() {
    assert_eq!(kind("2^(2^20)"), EvalErrorKind::LimitExceeded(LimitKind::IntegerSize));
}

#[test]
fn lists_thread_arithmetic() {
    assert_eq!(run("{1, 2} + {10, 20}").unwrap().to_string(), "{11, 22}");
    assert_eq!(run("{2, 4}/2 + 1").unwrap().to_string(), "{2, 3}");
    assert_eq!(kind("{1, 2} + {1, 2, 3}"), EvalErrorKind::BadArgCount);
}

#[test]
fn collections() {
    assert_eq!(run("Total[{1, 2, 3}]"), Ok(Value::int(6)));
    assert_eq!(run("Total[{}]"), Ok(Value::int(0)));
    assert_eq!(run("Mean[{1, 2}]"), Ok(Value::rational(3, 2)));
    assert_eq!(kind("Mean[{}]"), EvalErrorKind::BadArgCount);
    assert_eq!(run("Max[{3, 9/2}, 4]"), Ok(Value::rational(9, 2)));
    assert_eq!(run("Min[2, 1.5]"), Ok(Value::Real(1.5)));
    assert_eq!(run("First[{7, 8}] + Last[{7, 8}]"), Ok(Value::int(15)));
    assert_eq!(run("Select[{1, 2, 3, 4}, # > 2 &]").unwrap().to_string(), "{3, 4}");
    assert_eq!(run("Map[#^2 &, {1, 2, 3}]").unwrap().to_string(), "{1, 4, 9}");
    assert_eq!(run("Count[{1, 2, 1}, 1]"), Ok(Value::int(2)));
    assert_eq!(run("{5, 6, 7}[[2]]"), Ok(Value::int(6)));
    assert_eq!(run("{5, 6, 7}[[-1]]"), Ok(Value::int(7)));
    assert_eq!(kind("{5, 6, 7}[[4]]"), EvalErrorKind::BadArgType);
    assert_eq!(kind("First[{}]"), EvalErrorKind::BadArgType);
}

#[test]
fn associations() {
    assert_eq!(run("a = <|\"x\" -> 1, \"y\" -> 2|>; a[\"y\"]"), Ok(Value::int(2)));
    assert_eq!(run("a = <|\"x\" -> 1|>; a[\"z\"]").unwrap().to_string(), "Missing[\"z\"]");
    assert_eq!(run("Values[<|1 -> \"p\", 2 -> \"q\"|>]").unwrap().to_string(), "{\"p\", \"q\"}");
    assert_eq!(run("Keys[<|\"b\" -> 1, \"a\" -> 2, \"b\" -> 3|>]").unwrap().to_string(), "{\"b\", \"a\"}");
}

#[test]
fn logic_and_comparison() {
    assert_eq!(run("1 < 2 && 2 <= 2"), Ok(Value::Bool(true)));
    assert_eq!(run("1 > 2 || !(3 == 4)"), Ok(Value::Bool(true)));
    assert_eq!(run("If[3 != 3, 1, 2]"), Ok(Value::int(2)));
    assert_eq!(run("1 == 1.0000000001"), Ok(Value::Bool(true)));
    assert_eq!(run("3/5 == 0.6"), Ok(Value::Bool(true)));
    assert_eq!(run("\"a\" == \"b\""), Ok(Value::Bool(false)));
    assert_eq!(kind("If[1, 2, 3]"), EvalErrorKind::BadArgType);
    assert_eq!(kind("1 && True"), EvalErrorKind::BadArgType);
    // Short-circuit: the unevaluable right side is never reached.
    assert_eq!(run("False && 1/0 == 1"), Ok(Value::Bool(false)));
}

#[test]
fn definitions_and_entry_point() {
    assert_eq!(run("g := 1 + 1;"), Ok(Value::int(2)));
    assert_eq!(run("x = 3; y := x^2; x = 4; y"), Ok(Value::int(16)));
    assert_eq!(run("sq = #^2 &; sq[5]"), Ok(Value::int(25)));
    assert_eq!(run("{a, b} = {1, 2}; a + b"), Ok(Value::int(3)));
    assert_eq!(run("Module[{k = 2}, Function[k * #][10]]"), Ok(Value::int(20)));
}

#[test]
fn closures_capture_module_locals() {
    let src = "f := Module[{t = 3}, adder = (# + t &); adder]; h = f; h[4]";
    assert_eq!(run(src), Ok(Value::int(7)));
}

#[test]
fn symbolic_results_are_rejected() {
    assert_eq!(kind("x + 1"), EvalErrorKind::NonGroundResult);
    assert_eq!(kind("# &"), EvalErrorKind::NonGroundResult);
    assert_eq!(kind("{1, y}"), EvalErrorKind::NonGroundResult);
    assert_eq!(kind("Frobnicate[1]"), EvalErrorKind::UnknownOperation);
    assert_eq!(kind("Length[1, 2]"), EvalErrorKind::BadArgCount);
    assert_eq!(kind("Total[\"abc\"]"), EvalErrorKind::BadArgType);
    assert_eq!(kind("\"a\" + 1"), EvalErrorKind::BadArgType);
}

fn eval_raw(src: &str) -> Value {
    let program = parse_program(src).unwrap();
    let mut env = Environment::new();
    Evaluator::new(&mut env, Limits::default()).eval(&program).unwrap()
}

#[test]
fn algebra_through_programs() {
    assert_eq!(eval_raw("Simplify[(x + 1)*(x - 1)]").to_string(), "x^2 - 1");
    assert_eq!(eval_raw("Simplify[(x - 2)^2 + x]").to_string(), "x^2 - 3*x + 4");
    assert_eq!(eval_raw("Solve[x^2 - 5*x + 6 == 0, x]").to_string(), "{<|x -> 2|>, <|x -> 3|>}");
    assert_eq!(run("First[Solve[2*x + 1 == 5, x]][x]"), Ok(Value::int(2)));
    assert_eq!(run("s = First[Solve[{x + y == 10, x - y == 2}, {x, y}]]; {s[x], s[y]}").unwrap().to_string(), "{6, 4}");
    assert_eq!(kind("Solve[x == x, x]"), EvalErrorKind::UnknownOperation);
    assert_eq!(kind("Simplify[Sqrt[x]]"), EvalErrorKind::UnknownOperation);
}

#[test]
fn euclidean_distance_cases() {
    let pt = |a: Value, b: Value| Value::List(vec![a, b]);
    let origin = pt(Value::int(0), Value::int(0));
    assert_eq!(euclidean_distance(&origin, &origin), Ok(Value::int(0)));
    let d = pt(Value::rational(5, 2), Value::rational(5, 2));
    let e = pt(Value::rational(15, 2), Value::rational(5, 2));
    assert_eq!(euclidean_distance(&d, &e), Ok(Value::int(5)));
    let one = pt(Value::int(1), Value::int(1));
    assert_eq!(euclidean_distance(&origin, &one), Ok(Value::Real(std::f64::consts::SQRT_2)));
    let bad = pt(Value::str("a"), Value::int(1));
    assert_eq!(euclidean_distance(&origin, &bad).unwrap_err().kind, EvalErrorKind::BadArgType);
    let short = Value::List(vec![Value::int(1)]);
    assert_eq!(euclidean_distance(&origin, &short).unwrap_err().kind, EvalErrorKind::BadArgCount);
}

#[test]
fn unbounded_recursion_hits_a_limit() {
    let err = run("f := f + 1; f").unwrap_err();
    assert!(matches!(err.kind, EvalErrorKind::LimitExceeded(LimitKind::Depth | LimitKind::Steps)), "{err}");
    let loop_forever = "g := Map[g[#] &, {1}]; g";
    assert!(matches!(run(loop_forever).unwrap_err().kind, EvalErrorKind::LimitExceeded(_)));
}

#[test]
fn step_budget_is_enforced() {
    let src = "Total[Map[# + 1 &, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}]]";
    assert_eq!(run(src), Ok(Value::int(65)));
    let tight = Limits::default().with_steps(20);
    assert_eq!(run_with(src, &tight).unwrap_err().kind, EvalErrorKind::LimitExceeded(LimitKind::Steps));
    let (result, stats) = evaluate_traced(&parse_program(src).unwrap(), &mut Environment::new(), &Limits::default());
    assert!(result.is_ok());
    assert!(stats.steps > 20 && stats.steps < 200, "{}", stats.steps);
}

#[test]
fn list_length_limit() {
    let limits = Limits { max_list_len: 3, ..Limits::default() };
    assert_eq!(
        run_with("Length[{1, 2, 3, 4}]", &limits).unwrap_err().kind,
        EvalErrorKind::LimitExceeded(LimitKind::ListLength)
    );
}

#[test]
fn module_leaves_no_globals() {
    let mut env = Environment::new();
    let program = parse_program("Module[{a = 1, b}, b = a + 1; b * 10]").unwrap();
    let before = env.global_count();
    assert_eq!(evaluate(&program, &mut env, &Limits::default()), Ok(Value::int(20)));
    assert_eq!(env.global_count(), before);
    assert_eq!(env.depth(), 1);
}

#[test]
fn evaluation_is_deterministic() {
    let src = fixture("midsegment.wl");
    let first = run(&src);
    for _ in 0..5 {
        assert_eq!(run(&src), first);
    }
}
