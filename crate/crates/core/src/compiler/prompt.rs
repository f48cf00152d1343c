use crate::sketch::Hole;

pub const SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/v1/system.txt");
pub const USER_TEMPLATE: &str = include_str!("../../assets/prompts/v1/user.txt");
pub const PROMPT_VERSION: &str = "v1";

/// `(system_text, user_text)` for filling `hole` given the code compiled so
/// far.
pub fn build_prompt(context: &str, hole: &Hole) -> (String, String) {
    (SYSTEM_PROMPT.to_string(), fill_template(context.trim_end_matches('\n'), &hole_stub(hole)))
}

/// The `{hole}` section: a stub definition carrying the description.
pub fn hole_stub(hole: &Hole) -> String {
    let doc = hole.description.replace('\\', "\\\\").replace("\"\"\"", "\\\"\\\"\\\"");
    format!("def {}({}):\n    \"\"\"{}\"\"\"", hole.name(), hole.params().join(", "), doc)
}

/// Substitutes both placeholders in one pass so that neither value is
/// scanned for the other's placeholder.
fn fill_template(code: &str, hole: &str) -> String {
    let mut out = String::with_capacity(USER_TEMPLATE.len() + code.len() + hole.len());
    let mut rest = USER_TEMPLATE;
    while let Some(open) = rest.find('{') {
        let tail = &rest[open..];
        let (value, len) = if tail.starts_with("{code}") {
            (code, 6)
        } else if tail.starts_with("{hole}") {
            (hole, 6)
        } else {
            out.push_str(&rest[..open + 1]);
            rest = &rest[open + 1..];
            continue;
        };
        out.push_str(&rest[..open]);
        out.push_str(value);
        rest = &rest[open + len..];
    }
    out.push_str(rest);
    out
}
