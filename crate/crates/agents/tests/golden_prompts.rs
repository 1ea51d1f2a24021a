//! Golden-file tests: every template must render byte-for-byte identical to
//! the files shipped under tests/golden/.

use std::path::PathBuf;

use crn_agents::{render_prompt, PromptBindings, TemplateId};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.txt"))
}

/// The canonical bindings used to produce the golden files.
pub fn golden_bindings() -> PromptBindings {
    PromptBindings::new()
        .label("basophil")
        .task("blood cell")
        .symbol("lobed nucleus")
        .rule_text("lobed nucleus AND dark granules")
        .concepts(["lobed nucleus", "dark granules"])
        .concept_count(5)
        .symbol_count(5)
}

#[test]
fn all_six_templates_match_their_golden_files() {
    let bindings = golden_bindings();
    for template in TemplateId::ALL {
        let rendered = render_prompt(template, &bindings).unwrap();
        let path = golden_path(template.as_str());
        let expected = std::fs::read(&path)
            .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
        assert_eq!(
            rendered.as_bytes(),
            expected.as_slice(),
            "golden mismatch for template {:?}\nrendered: {rendered}",
            template.as_str()
        );
    }
}

#[test]
fn golden_files_have_no_trailing_whitespace() {
    for template in TemplateId::ALL {
        let bytes = std::fs::read(golden_path(template.as_str())).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text, text.trim_end(), "trailing whitespace in {}", template.as_str());
    }
}
