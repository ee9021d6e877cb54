//! Canonical source rendering of [`Expr`] trees.
//!
//! The output reparses to the same tree. Infix syntax is used only where the
//! parser would rebuild the identical node; other applications of operator
//! heads (wrong arity, for instance) print in bracket form, which the parser
//! also maps back onto the same head.

use super::ast::Expr;
use super::parser::{prec, Assoc};

pub fn format_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

enum Form<'a> {
    Binary(&'static str, u8, Assoc, &'a Expr, &'a Expr),
    Prefix(&'static str, u8, &'a Expr),
    Compound(&'a [Expr]),
    Part(&'a Expr, &'a [Expr]),
    Other,
}

fn operator_form(e: &Expr) -> Form<'_> {
    let (Some(head), Expr::Apply(_, args)) = (e.head_name(), e) else {
        return Form::Other;
    };
    if head == "CompoundExpression" && args.len() >= 2 {
        return Form::Compound(args);
    }
    if head == "Part" && args.len() >= 2 {
        return Form::Part(&args[0], &args[1..]);
    }
    if args.len() == 1 {
        return match head {
            "Minus" => Form::Prefix("-", prec::NEG, &args[0]),
            "Not" => Form::Prefix("!", prec::NOT, &args[0]),
            _ => Form::Other,
        };
    }
    if args.len() == 2 {
        let info = match head {
            "Set" => Some((" = ", prec::ASSIGN, Assoc::Right)),
            "SetDelayed" => Some((" := ", prec::ASSIGN, Assoc::Right)),
            "Rule" => Some((" -> ", prec::RULE, Assoc::Right)),
            "Or" => Some((" || ", prec::OR, Assoc::Left)),
            "And" => Some((" && ", prec::AND, Assoc::Left)),
            "Equal" => Some((" == ", prec::COMPARE, Assoc::Left)),
            "Unequal" => Some((" != ", prec::COMPARE, Assoc::Left)),
            "Less" => Some((" < ", prec::COMPARE, Assoc::Left)),
            "LessEqual" => Some((" <= ", prec::COMPARE, Assoc::Left)),
            "Greater" => Some((" > ", prec::COMPARE, Assoc::Left)),
            "GreaterEqual" => Some((" >= ", prec::COMPARE, Assoc::Left)),
            "Plus" => Some((" + ", prec::ADD, Assoc::Left)),
            "Subtract" => Some((" - ", prec::ADD, Assoc::Left)),
            "Times" => Some((" * ", prec::MUL, Assoc::Left)),
            "Divide" => Some((" / ", prec::MUL, Assoc::Left)),
            "Power" => Some(("^", prec::POWER, Assoc::Right)),
            _ => None,
        };
        if let Some((sym, p, assoc)) = info {
            return Form::Binary(sym, p, assoc, &args[0], &args[1]);
        }
    }
    Form::Other
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::PureFn(_) => prec::FUNCTION,
        Expr::Integer(n) if n.sign() == num_bigint::Sign::Minus => prec::NEG,
        Expr::Real(x) if x.is_sign_negative() => prec::NEG,
        Expr::Apply(..) => match operator_form(e) {
            Form::Binary(_, p, ..) | Form::Prefix(_, p, _) => p,
            Form::Compound(_) => prec::COMPOUND,
            Form::Part(..) | Form::Other => prec::APPLY,
        },
        _ => prec::ATOM,
    }
}

fn write_child(e: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(item, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Integer(n) => out.push_str(&n.to_string()),
        Expr::Real(x) => out.push_str(&format_real(*x)),
        Expr::Str(s) => write_string_literal(s, out),
        Expr::Sym(name) => out.push_str(name),
        Expr::Slot(1) => out.push('#'),
        Expr::Slot(n) => {
            out.push('#');
            out.push_str(&n.to_string());
        }
        Expr::List(items) => {
            out.push('{');
            write_list(items, out);
            out.push('}');
        }
        Expr::Assoc(items) => {
            out.push_str("<|");
            write_list(items, out);
            out.push_str("|>");
        }
        Expr::PureFn(body) => {
            write_child(body, precedence(body) < prec::FUNCTION, out);
            out.push_str(" &");
        }
        Expr::Apply(head, args) => match operator_form(e) {
            Form::Binary(sym, p, assoc, lhs, rhs) => {
                let (lp, rp) = (precedence(lhs), precedence(rhs));
                let (left_parens, right_parens) = match assoc {
                    Assoc::Left => (lp < p, rp <= p),
                    Assoc::Right => (lp <= p, rp < p),
                };
                write_child(lhs, left_parens, out);
                out.push_str(sym);
                write_child(rhs, right_parens, out);
            }
            Form::Prefix(sym, p, operand) => {
                out.push_str(sym);
                write_child(operand, precedence(operand) < p, out);
            }
            Form::Compound(stmts) => {
                let last = stmts.len() - 1;
                for (i, stmt) in stmts.iter().enumerate() {
                    if i == last && stmt.is_sym("Null") {
                        out.push(';');
                        return;
                    }
                    if i > 0 {
                        out.push_str("; ");
                    }
                    write_child(stmt, precedence(stmt) <= prec::COMPOUND, out);
                }
            }
            Form::Part(target, indices) => {
                write_child(target, precedence(target) < prec::APPLY, out);
                out.push_str("[[");
                write_list(indices, out);
                out.push_str("]]");
            }
            Form::Other => {
                write_child(head, precedence(head) < prec::APPLY, out);
                out.push('[');
                write_list(args, out);
                out.push(']');
            }
        },
    }
}

/// Shortest round-tripping decimal form, always with a `.` so it relexes as
/// a real. Non-finite values fall back to their symbolic names.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "Indeterminate".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Infinity".into() } else { "-Infinity".into() };
    }
    let mut s = format!("{x}");
    if !s.contains('.') {
        s.push('.');
    }
    s
}

pub(crate) fn write_string_literal(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
}
