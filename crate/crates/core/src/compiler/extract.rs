/// Code inside the markdown fences of a completion, blocks joined by a
/// newline. A completion without any fence is taken to be code. An
/// unterminated fence runs to the end of the text.
pub fn extract_code(response: &str) -> String {
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in response.lines() {
        let fence = line.trim_start().starts_with("```");
        match current.as_mut() {
            None if fence => current = Some(Vec::new()),
            None => {}
            Some(_) if fence => blocks.push(current.take().unwrap().join("\n")),
            Some(lines) => lines.push(line),
        }
    }
    if let Some(lines) = current {
        blocks.push(lines.join("\n"));
    }
    if blocks.is_empty() && !response.contains("```") {
        return response.to_string();
    }
    blocks.join("\n")
}
