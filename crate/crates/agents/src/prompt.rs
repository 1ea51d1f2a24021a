use crate::error::AgentError;

/// The six prompt templates used across the pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateId {
    /// Visual concept extraction from one training image.
    Concept,
    /// Symbol-set initialization from the class label.
    InitSymbols,
    /// One symbol-exploration step.
    Explore,
    /// Entailment scoring of a candidate rule.
    Entail,
    /// Per-symbol presence verification on a test image.
    Verify,
    /// Reasoner judgment of how predictive a symbol set is for a task.
    Representativeness,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        TemplateId::Concept,
        TemplateId::InitSymbols,
        TemplateId::Explore,
        TemplateId::Entail,
        TemplateId::Verify,
        TemplateId::Representativeness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateId::Concept => "concept",
            TemplateId::InitSymbols => "init_symbols",
            TemplateId::Explore => "explore",
            TemplateId::Entail => "entail",
            TemplateId::Verify => "verify",
            TemplateId::Representativeness => "representativeness",
        }
    }
}

/// Placeholder values for [`render_prompt`].
///
/// `concepts` carries the class's visual concept list; for the
/// representativeness template it carries the rule's symbol list instead.
/// Leaving `concepts` unbound renders the explore/entail templates without
/// their visual-context prefix (the ungrounded ablation).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptBindings {
    pub label: Option<String>,
    pub concepts: Option<Vec<String>>,
    pub symbol: Option<String>,
    pub rule_text: Option<String>,
    pub concept_count: Option<usize>,
    pub symbol_count: Option<usize>,
    pub task: Option<String>,
}

impl PromptBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn concepts(mut self, concepts: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.concepts = Some(concepts.into_iter().map(Into::into).collect());
        self
    }

    pub fn symbol(mut self, symbol: impl Into<String>) -> Self {
        self.symbol = Some(symbol.into());
        self
    }

    pub fn rule_text(mut self, rule_text: impl Into<String>) -> Self {
        self.rule_text = Some(rule_text.into());
        self
    }

    pub fn concept_count(mut self, count: usize) -> Self {
        self.concept_count = Some(count);
        self
    }

    pub fn symbol_count(mut self, count: usize) -> Self {
        self.symbol_count = Some(count);
        self
    }

    pub fn task(mut self, task: impl Into<String>) -> Self {
        self.task = Some(task.into());
        self
    }

    fn require<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T, AgentError> {
        field
            .as_ref()
            .ok_or_else(|| AgentError::UnboundPlaceholder(name.to_string()))
    }
}

const ENTAILMENT_OPTIONS: &str = "(A) 0.1, (B) 0.5, (C) 0.7 (D) 0.9, (E) 0.95.";

/// Renders a template with its placeholders substituted. Pure and
/// byte-deterministic; missing placeholders are an error.
pub fn render_prompt(template: TemplateId, bindings: &PromptBindings) -> Result<String, AgentError> {
    match template {
        TemplateId::Concept => {
            let label = bindings.require(&bindings.label, "label")?;
            let count = bindings.require(&bindings.concept_count, "concept_count")?;
            Ok(format!(
                "In this picture, we see {label}. List {count} visual concepts that can be seen in relation to {label}."
            ))
        }
        TemplateId::InitSymbols => {
            let label = bindings.require(&bindings.label, "label")?;
            let count = bindings.require(&bindings.symbol_count, "symbol_count")?;
            Ok(format!(
                "In a picture, we see {label}. List {count} entities that can be seen that verify {label}."
            ))
        }
        TemplateId::Explore => {
            let label = bindings.require(&bindings.label, "label")?;
            let symbol = bindings.require(&bindings.symbol, "symbol")?;
            let core = format!(
                "in a picture, if {symbol} AND [CONDITION] THEN {label}. What is [CONDITION]?"
            );
            Ok(match &bindings.concepts {
                Some(concepts) => format!(
                    "We know that for {label}, we generally observe {}. Based on this, {core}",
                    concepts.join(", ")
                ),
                None => {
                    let mut chars = core.chars();
                    let first = chars.next().unwrap().to_uppercase();
                    format!("{first}{}", chars.as_str())
                }
            })
        }
        TemplateId::Entail => {
            let label = bindings.require(&bindings.label, "label")?;
            let rule = bindings.require(&bindings.rule_text, "rule_text")?;
            let question = format!(
                "Given {rule}, how likely is {label}? Choose from the following options - {ENTAILMENT_OPTIONS}"
            );
            Ok(match &bindings.concepts {
                Some(concepts) => format!(
                    "We know {} is responsible for {label}. {question}",
                    concepts.join(", ")
                ),
                None => question,
            })
        }
        TemplateId::Verify => {
            let task = bindings.require(&bindings.task, "task")?;
            let symbol = bindings.require(&bindings.symbol, "symbol")?;
            Ok(format!(
                "In the image we can see a {task}. Does this image show {symbol}? Answer in Yes or No."
            ))
        }
        TemplateId::Representativeness => {
            let symbols = bindings.require(&bindings.concepts, "concepts")?;
            let label = bindings.require(&bindings.label, "label")?;
            let task = bindings.require(&bindings.task, "task")?;
            Ok(format!(
                "How likely are {} in predicting {label} for a {task}? Output only a single probability value",
                symbols.join(", ")
            ))
        }
    }
}
