use neurosym::extraction::{Classification, CompletionRecord};

/// 100 completions, 25 of each classification, with the label each must get.
pub fn labelled_completions() -> Vec<(CompletionRecord, Classification)> {
    let mut out = Vec::new();
    for k in 0..25 {
        let text = match k % 5 {
            0 => format!("The answer is {k}."),
            1 => format!("Let me think. {k} apples plus one is {}.", k + 1),
            2 => format!("<neurosym>f := Module[{{}}, {k}];</neurosym>"),
            3 => format!("<NEUROSYMTAG>{k}</NEUROSYMTAG> so B"),
            _ => format!("Option ({}) looks right; closing </neurosymtag> alone", ["A", "B", "C", "D", "E"][k % 5]),
        };
        out.push((text, Classification::NoCode));
    }
    for k in 0..25 {
        let text = match k % 5 {
            0 => format!("<neurosymtag>f := Module[{{}}, {k} +];</neurosymtag>"),
            1 => format!("Here: <neurosymtag>f := Module[{{a = {k}}}, a * (a + 1];</neurosymtag>"),
            2 => format!("<neurosymtag>f := Module[{{}}, {k}"),
            3 => format!("<neurosymtag>x = \"unterminated {k};</neurosymtag>"),
            _ => format!("<neurosymtag>{{1, 2, {k}}}[[</neurosymtag>"),
        };
        out.push((text, Classification::SyntaxError));
    }
    for k in 0..25 {
        let text = match k % 5 {
            0 => format!("<neurosymtag>f := Module[{{}}, {k}/0];</neurosymtag>"),
            1 => format!("<neurosymtag>f := Module[{{}}, Frobnicate[{k}]];</neurosymtag>"),
            2 => format!("<neurosymtag>f := Module[{{}}, y + {k}];</neurosymtag>"),
            3 => format!("<neurosymtag>f := Module[{{}}, Length[{k}, {k}]];</neurosymtag>"),
            _ => format!("<neurosymtag>g := g + {k}; g</neurosymtag>"),
        };
        out.push((text, Classification::RuntimeError));
    }
    for k in 0..25 {
        let text = match k % 5 {
            0 => format!("<neurosymtag>f := Module[{{}}, {k} + 1];</neurosymtag>"),
            1 => format!("So <neurosymtag>f := Module[{{a = {k}}}, a^2];</neurosymtag> done."),
            2 => format!("<neurosymtag>Total[{{1, 2, {k}}}]</neurosymtag>"),
            3 => format!("<neurosymtag>1/0</neurosymtag> fixed: <neurosymtag>{k}/3</neurosymtag>"),
            _ => format!("<neurosymtag>f := Module[{{o = <|\"A\" -> {k}|>}}, Keys[o][[1]]];</neurosymtag>"),
        };
        out.push((text, Classification::Executed));
    }
    out.into_iter()
        .enumerate()
        .map(|(i, (text, label))| (CompletionRecord::new(format!("c{i}"), format!("p{}", i % 10), text), label))
        .collect()
}
