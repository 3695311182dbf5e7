//! JSON and tree views of a parsed node list.

use serde_json::{json, Value};
use stex_disamb::latex::{ArgKind, LatexNode};

pub fn to_json(nodes: &[LatexNode]) -> Value {
    Value::Array(nodes.iter().map(node).collect())
}

fn node(n: &LatexNode) -> Value {
    match n {
        LatexNode::Text(s) => json!({"type": "text", "text": s}),
        LatexNode::Whitespace(s) => json!({"type": "whitespace", "text": s}),
        LatexNode::Comment(s) => json!({"type": "comment", "text": s}),
        LatexNode::Group(body) => json!({"type": "group", "body": to_json(body)}),
        LatexNode::Math(m) => json!({"type": "math", "delimiter": m.delimiter, "body": to_json(&m.body)}),
        LatexNode::Command(c) => json!({
            "type": "command",
            "name": c.name,
            "args": c.args.iter().map(|a| json!({
                "kind": match a.kind {
                    ArgKind::Optional => "optional",
                    ArgKind::Braced => "braced",
                    ArgKind::Bare => "bare",
                },
                "body": to_json(&a.body),
            })).collect::<Vec<_>>(),
        }),
        LatexNode::Environment(e) => json!({
            "type": "environment",
            "name": e.name,
            "args": e.args.iter().map(|a| to_json(&a.body)).collect::<Vec<_>>(),
            "body": to_json(&e.body),
        }),
    }
}

pub fn tree(nodes: &[LatexNode]) -> String {
    let mut out = String::new();
    for n in nodes {
        write_tree(n, 0, &mut out);
    }
    out
}

fn write_tree(n: &LatexNode, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let line = match n {
        LatexNode::Text(s) => format!("text {s:?}"),
        LatexNode::Whitespace(s) => format!("space {s:?}"),
        LatexNode::Comment(s) => format!("comment {s:?}"),
        LatexNode::Group(_) => "group".to_string(),
        LatexNode::Math(m) => format!("math {:?}", m.delimiter),
        LatexNode::Command(c) => format!("\\{}", c.name),
        LatexNode::Environment(e) => format!("env {}", e.name),
    };
    out.push_str(&pad);
    out.push_str(&line);
    out.push('\n');
    match n {
        LatexNode::Group(body) => body.iter().for_each(|c| write_tree(c, depth + 1, out)),
        LatexNode::Math(m) => m.body.iter().for_each(|c| write_tree(c, depth + 1, out)),
        LatexNode::Command(c) => {
            for a in &c.args {
                let (o, cl) = match a.kind {
                    ArgKind::Optional => ("[", "]"),
                    ArgKind::Braced => ("{", "}"),
                    ArgKind::Bare => ("", ""),
                };
                out.push_str(&format!("{pad}  arg {o}{cl}\n"));
                a.body.iter().for_each(|c| write_tree(c, depth + 2, out));
            }
        }
        LatexNode::Environment(e) => e.body.iter().for_each(|c| write_tree(c, depth + 1, out)),
        _ => {}
    }
}
