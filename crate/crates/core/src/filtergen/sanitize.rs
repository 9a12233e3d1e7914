/// Pulls the filter document out of an LLM reply.
///
/// If the reply has a fenced code block, only the first block is searched.
/// The first balanced top-level `{...}` (string- and escape-aware) is
/// returned verbatim. Without one, the trimmed search text is returned so
/// the parser reports the syntax error.
pub fn extract_document(response: &str) -> &str {
    let region = fenced_block(response).unwrap_or(response);
    match balanced_object(region) {
        Some(doc) => doc,
        None => region.trim(),
    }
}

fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    // skip an info string such as `json`
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    let end = body.find("```")?;
    let block = &body[..end];
    block.contains('{').then_some(block)
}

fn balanced_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    None
}
