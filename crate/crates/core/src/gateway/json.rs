use std::ops::Range;

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JsonError {
    #[error("no JSON object found in response")]
    NoJsonFound,
    #[error("malformed JSON in response: {0}")]
    MalformedJson(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedJson {
    pub value: Value,
    /// Byte range of `raw_text` that held the object.
    pub span: Range<usize>,
}

/// Parses the first well-formed JSON object embedded in `raw_text`.
///
/// Surrounding prose and markdown code fences are skipped. If an opening
/// brace exists but no object starting at any brace parses, the error from
/// the first attempt is reported as [`JsonError::MalformedJson`].
pub fn extract_json(raw_text: &str) -> Result<ExtractedJson, JsonError> {
    let mut first_error = None;
    for (start, _) in raw_text.match_indices('{') {
        let mut stream =
            serde_json::Deserializer::from_str(&raw_text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(value @ Value::Object(_))) => {
                let end = start + stream.byte_offset();
                return Ok(ExtractedJson {
                    value,
                    span: start..end,
                });
            }
            Some(Err(e)) if first_error.is_none() => first_error = Some(e.to_string()),
            _ => {}
        }
    }
    Err(match first_error {
        Some(message) => JsonError::MalformedJson(message),
        None => JsonError::NoJsonFound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fenced_block() {
        let raw = "```json\n{\"a\": true}\n```";
        let got = extract_json(raw).unwrap();
        assert_eq!(got.value, json!({"a": true}));
        assert_eq!(&raw[got.span], "{\"a\": true}");
    }

    #[test]
    fn prose_around_object() {
        let raw = "Sure! Here you go: {\"x\": {\"syntax\": true}} Hope it helps.";
        let got = extract_json(raw).unwrap();
        assert_eq!(got.value, json!({"x": {"syntax": true}}));
    }

    #[test]
    fn nothing_to_find() {
        assert_eq!(extract_json("no json here"), Err(JsonError::NoJsonFound));
        assert_eq!(extract_json("[1, 2]"), Err(JsonError::NoJsonFound));
    }

    #[test]
    fn truncated_object_is_malformed() {
        assert!(matches!(
            extract_json("{\"a\": {\"syntax\": tru"),
            Err(JsonError::MalformedJson(_))
        ));
    }

    #[test]
    fn skips_broken_brace_before_valid_object() {
        let raw = "use {braces} like {\"k\": 1}";
        assert_eq!(extract_json(raw).unwrap().value, json!({"k": 1}));
    }
}
