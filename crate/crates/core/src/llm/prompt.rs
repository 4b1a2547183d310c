//! Prompt construction from the fixed extraction template.

use super::schema::ExtractionSchema;
use super::LlmError;

pub const PROMPT_TEMPLATE: &str = "You are an advanced AI designed to extract key agricultural information from interviews. Accuracy is crucial as it impacts crop yield, finances, and resource management. Ensure high precision and high recall in your extractions.

%%Instructions:
1. Read Carefully: Identify and extract only the information relevant to agriculture from the text. Remember that the text is an interview. Focus on answers than on questions when extracting information.
2. Exclusivity and Precision: Only include explicitly mentioned information. Avoid assumptions, and do not alter numerical data. Ensure accuracy and completeness.
3. Extract Exhaustively: Extract all instances of the same type of information if multiple are present. There can be two or more instances within the same text. In such cases, you should extract ALL of them (e.g., If there are three instances, return [{first instance}, {second instance}, {third instance}]).
4. No Hallucination: If no relevant information is present in the text, do not return anything. Do NOT copy/extract anything from the schema/format examples given in three backticks (```).

%%Format:
1. Schema Compliance: Use the provided schema for extraction. Do not add or alter properties/fields.
```{schema}``` (do NOT extract anything from within three backticks)
2. JSON Format: Return the data in JSON format as shown in the example. Follow the format exactly, but do not copy its content in any case.
```{example}``` (do NOT extract anything from within three backticks)

%%Text for Extraction: {text}

Your task is essential for informed agricultural decision-making. Continuously refine your extraction techniques to stay accurate and relevant.";

/// Backticks in substituted text would open or close fences; they become
/// apostrophes.
fn defuse(s: &str) -> String {
    s.replace('`', "'")
}

/// Fills the template's `{schema}`, `{example}` and `{text}` slots in one
/// pass, so substituted text is never rescanned for slots.
pub fn build_prompt(s: &ExtractionSchema, block_text: &str) -> Result<String, LlmError> {
    if block_text.trim().is_empty() {
        return Err(LlmError::EmptyBlock);
    }
    let slots = [
        ("{schema}", defuse(&s.render_schema())),
        ("{example}", defuse(&s.render_example())),
        ("{text}", defuse(block_text)),
    ];
    let mut out = String::with_capacity(PROMPT_TEMPLATE.len() + block_text.len() + 512);
    let mut rest = PROMPT_TEMPLATE;
    while let Some((pos, key, value)) =
        slots.iter().filter_map(|(k, v)| rest.find(k).map(|p| (p, *k, v))).min_by_key(|(p, _, _)| *p)
    {
        out.push_str(&rest[..pos]);
        out.push_str(value);
        rest = &rest[pos + key.len()..];
    }
    out.push_str(rest);
    Ok(out)
}
