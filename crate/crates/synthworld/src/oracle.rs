use rand::Rng;

use crn_agents::{AgentEndpoint, AgentError, AgentReply, AgentRole, Stimulus, Transport};

use crate::world::{derive_rng, World};

/// Log-probability stand-in for ln(0); exp(-1e9) underflows to exactly 0,
/// so probability-1 answers survive the softmax round trip exactly.
const LOG_ZERO: f64 = -1e9;

fn log_prob(p: f64) -> f64 {
    if p <= 0.0 {
        LOG_ZERO
    } else {
        p.ln()
    }
}

/// Agents backed by a synthetic world instead of a live model.
///
/// Prompts are parsed against the pipeline's own templates, so the oracle
/// reacts to exactly what a real agent would see; in particular the grounding
/// context is detected from the rendered prompt text, never passed out of
/// band.
pub struct OracleTransport {
    world: World,
}

impl OracleTransport {
    pub fn new(world: World) -> Self {
        OracleTransport { world }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    fn image_from(&self, stimulus: &Stimulus) -> Result<crate::SynthImage, AgentError> {
        let id = stimulus.synth_id.as_ref().ok_or_else(|| {
            AgentError::MalformedRequest("oracle visual agents need a synthetic stimulus".into())
        })?;
        self.world
            .image_by_id(id)
            .map_err(|e| AgentError::MalformedRequest(e.to_string()))
    }

    fn concept_reply(&self, stimulus: &Stimulus) -> Result<AgentReply, AgentError> {
        let image = self.image_from(stimulus)?;
        let mut present: Vec<String> = image
            .present_symbols()
            .into_iter()
            .map(str::to_string)
            .collect();
        let mut rng = derive_rng(self.world.seed(), &["concepts", &image.id]);
        // deterministic per-image shuffle so truncation keeps varied subsets
        for i in (1..present.len()).rev() {
            let j = rng.gen_range(0..=i);
            present.swap(i, j);
        }
        let noise = self.world.spec().concept_noise;
        let distractors = &self.world.spec().distractor_symbols;
        let lines: Vec<String> = present
            .iter()
            .enumerate()
            .map(|(i, symbol)| {
                let shown = if noise > 0.0 && rng.gen_bool(noise) {
                    &distractors[rng.gen_range(0..distractors.len())]
                } else {
                    symbol
                };
                format!("{}. {shown}", i + 1)
            })
            .collect();
        if lines.is_empty() {
            return Ok(AgentReply::text_only("(nothing notable)"));
        }
        Ok(AgentReply::text_only(lines.join("\n")))
    }

    fn init_symbols_reply(&self, text: &str) -> Result<AgentReply, AgentError> {
        let label = extract(text, "In a picture, we see ", ". List")?;
        let count: usize = extract(text, "List ", " entities")?
            .parse()
            .map_err(|_| malformed(text, "initial symbol count"))?;
        let vocab = self
            .world
            .vocab(&label)
            .map_err(|e| AgentError::MalformedRequest(e.to_string()))?;
        let mut symbols: Vec<&String> = vocab.iter().collect();
        let mut rng = derive_rng(self.world.seed(), &["init", &label]);
        for i in (1..symbols.len()).rev() {
            let j = rng.gen_range(0..=i);
            symbols.swap(i, j);
        }
        let lines: Vec<String> = symbols
            .iter()
            .take(count)
            .enumerate()
            .map(|(i, s)| format!("{}. {s}", i + 1))
            .collect();
        Ok(AgentReply::text_only(lines.join("\n")))
    }

    fn explore_reply(&self, stimulus: &Stimulus) -> Result<AgentReply, AgentError> {
        let text = &stimulus.text;
        let label = extract(text, " THEN ", ".")?;
        let concepts = if text.contains("we generally observe") {
            let list = extract(text, "we generally observe ", ". Based on this")?;
            Some(
                list.split(", ")
                    .map(str::to_string)
                    .collect::<Vec<String>>(),
            )
        } else {
            None
        };
        let key = format!("{text}#{}", stimulus.sample_index);
        let mut rng = derive_rng(self.world.seed(), &["explore-draw", &key]);
        let draw: u64 = rng.gen();
        let proposal = self
            .world
            .oracle_linguistic(concepts.as_deref(), &label, draw)
            .map_err(|e| AgentError::MalformedRequest(e.to_string()))?;
        Ok(AgentReply::text_only(proposal))
    }

    fn entail_reply(&self, stimulus: &Stimulus) -> Result<AgentReply, AgentError> {
        let text = &stimulus.text;
        let rule_text = extract(text, "Given ", ", how likely is ")?;
        let label = extract(text, ", how likely is ", "?")?;
        let grounded = text.contains(" is responsible for ");
        let vocab = self
            .world
            .vocab(&label)
            .map_err(|e| AgentError::MalformedRequest(e.to_string()))?;
        let all_true = rule_text
            .split(" AND ")
            .map(|s| s.trim().trim_start_matches("NOT "))
            .all(|symbol| vocab.contains(symbol));

        let key = format!("{text}#{}", stimulus.sample_index);
        let mut rng = derive_rng(self.world.seed(), &["entail", &key]);
        let spec = self.world.spec();
        let choice = if all_true {
            if rng.gen_bool(0.5) {
                "(E)"
            } else {
                "(D)"
            }
        } else if grounded {
            if rng.gen_bool(spec.entail_reject_grounded) {
                "(A)"
            } else {
                "(D)"
            }
        } else if rng.gen_bool(spec.entail_accept_ungrounded) {
            "(D)"
        } else {
            "(A)"
        };
        Ok(AgentReply::text_only(choice))
    }

    fn representativeness_reply(&self, text: &str) -> Result<AgentReply, AgentError> {
        let symbols = extract(text, "How likely are ", " in predicting ")?;
        let label = extract(text, " in predicting ", " for a ")?;
        let vocab = self
            .world
            .vocab(&label)
            .map_err(|e| AgentError::MalformedRequest(e.to_string()))?;
        let listed: Vec<&str> = symbols.split(", ").collect();
        let true_count = listed.iter().filter(|s| vocab.contains(**s)).count();
        let score = 0.2 + 0.6 * true_count as f64 / listed.len().max(1) as f64;
        Ok(AgentReply::text_only(format!("{score:.2}")))
    }

    fn verifier_reply(&self, stimulus: &Stimulus) -> Result<AgentReply, AgentError> {
        let symbol = extract(&stimulus.text, "Does this image show ", "?")?;
        let image = self.image_from(stimulus)?;
        let p = self.world.oracle_verifier(&image, &symbol);
        let text = if p >= 0.5 { "Yes" } else { "No" };
        Ok(AgentReply::with_alternatives(
            text,
            vec![("Yes", log_prob(p)), ("No", log_prob(1.0 - p))],
        ))
    }

    fn system1_reply(&self, stimulus: &Stimulus) -> Result<AgentReply, AgentError> {
        let asked_label = extract(&stimulus.text, "Does this image show ", "?")?;
        let image = self.image_from(stimulus)?;
        let labels = self.world.labels();
        let true_index = labels
            .iter()
            .position(|l| *l == image.label)
            .ok_or_else(|| malformed(&stimulus.text, "system-1 label"))?;

        // one predicted class per image, shared by every per-label probe
        let mut rng = derive_rng(self.world.seed(), &["s1", &image.id]);
        let row = &self.world.spec().confusion[true_index];
        let mut draw: f64 = rng.gen();
        let mut predicted = labels.len() - 1;
        for (j, p) in row.iter().enumerate() {
            if draw < *p {
                predicted = j;
                break;
            }
            draw -= *p;
        }

        let confidence = self.world.spec().system1_confidence;
        let p = if labels[predicted] == asked_label {
            confidence
        } else {
            (1.0 - confidence) / (labels.len() - 1).max(1) as f64
        };
        let text = if p >= 0.5 { "Yes" } else { "No" };
        Ok(AgentReply::with_alternatives(
            text,
            vec![("Yes", log_prob(p)), ("No", log_prob(1.0 - p))],
        ))
    }
}

fn extract(text: &str, start: &str, end: &str) -> Result<String, AgentError> {
    let from = text
        .find(start)
        .ok_or_else(|| malformed(text, start))?
        + start.len();
    let to = text[from..]
        .find(end)
        .ok_or_else(|| malformed(text, end))?
        + from;
    Ok(text[from..to].to_string())
}

fn malformed(text: &str, what: &str) -> AgentError {
    AgentError::MalformedRequest(format!(
        "oracle could not find {what:?} in prompt {:?}",
        text.chars().take(120).collect::<String>()
    ))
}

impl Transport for OracleTransport {
    fn send(
        &self,
        endpoint: &AgentEndpoint,
        _system_text: &str,
        stimulus: &Stimulus,
    ) -> Result<AgentReply, AgentError> {
        match endpoint.role {
            AgentRole::VisualConcept => self.concept_reply(stimulus),
            AgentRole::Verifier => self.verifier_reply(stimulus),
            AgentRole::System1 => self.system1_reply(stimulus),
            AgentRole::Linguistic => {
                let text = &stimulus.text;
                if text.contains("Choose from the following options") {
                    self.entail_reply(stimulus)
                } else if text.contains("What is [CONDITION]?") {
                    self.explore_reply(stimulus)
                } else if text.contains("Output only a single probability value") {
                    self.representativeness_reply(text)
                } else if text.contains(" entities that can be seen that verify ") {
                    self.init_symbols_reply(text)
                } else {
                    Err(malformed(text, "a known linguistic template"))
                }
            }
        }
    }
}
