pub const MSAN_TRACE_V1: &str = include_str!("../../prompts/msan_trace.v1.txt");
pub const MSAN_FORMALIZE_V1: &str = include_str!("../../prompts/msan_formalize.v1.txt");
pub const EQUIV_FORMALIZE_V1: &str = include_str!("../../prompts/equiv_formalize.v1.txt");

/// Substitutes `{name}` placeholders; `{{` and `}}` stand for literal
/// braces. Unknown placeholders are left as written.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if tail.starts_with('{') {
            if let Some(end) = tail.find('}') {
                let name = &tail[1..end];
                if let Some((_, value)) = vars.iter().find(|(n, _)| *n == name) {
                    out.push_str(value);
                    rest = &tail[end + 1..];
                    continue;
                }
            }
        }
        out.push_str(&tail[..1]);
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

/// Splits caller snippets into file context and explanation at the first
/// line reading `EXPLANATION:`.
pub fn split_explanation(snippets: &str) -> (&str, &str) {
    let mut offset = 0;
    for line in snippets.split_inclusive('\n') {
        if line.trim() == "EXPLANATION:" {
            return (&snippets[..offset], &snippets[offset + line.len()..]);
        }
        offset += line.len();
    }
    (snippets, "")
}

pub fn msan_trace_prompt(file_context: &str, explanation: &str) -> String {
    render(
        MSAN_TRACE_V1,
        &[("file_context", file_context), ("explanation", explanation)],
    )
}

pub fn msan_formalize_prompt(trace: &str) -> String {
    render(MSAN_FORMALIZE_V1, &[("trace", trace)])
}

pub fn equiv_formalize_prompt() -> String {
    render(EQUIV_FORMALIZE_V1, &[])
}
