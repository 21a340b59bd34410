//! Tiered, language-tagged prompt templates with placeholder substitution.
//!
//! Four tiers gradually add task information: a generic base instruction, the
//! task name, a short description with synonyms, and a condensed version of
//! the annotation handbook. Every template exists in English and German and
//! in two segment orders (task-first vs. content in the middle), giving the
//! prompt-language and segment-order experimental axes.
//!
//! The German bodies are translations of the English canon; both are authored
//! here and shipped as versioned template files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{ClassLabel, Sample};
use crate::error::{Error, Result};

/// Information level of a template. The order is the information
/// monotonicity order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptTier {
    Base,
    TaskName,
    Description,
    Handbook,
}

impl PromptTier {
    pub const ALL: [PromptTier; 4] = [
        PromptTier::Base,
        PromptTier::TaskName,
        PromptTier::Description,
        PromptTier::Handbook,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptTier::Base => "base",
            PromptTier::TaskName => "task-name",
            PromptTier::Description => "description",
            PromptTier::Handbook => "handbook",
        }
    }
}

impl std::str::FromStr for PromptTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(PromptTier::Base),
            "task-name" => Ok(PromptTier::TaskName),
            "description" => Ok(PromptTier::Description),
            "handbook" => Ok(PromptTier::Handbook),
            other => Err(Error::template(format!("unknown tier '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    De,
}

impl Language {
    pub fn as_str(&self) -> &'static str {
        match self {
            Language::En => "en",
            Language::De => "de",
        }
    }

    /// Keywords the rendered prompt must carry to emphasize single-class
    /// output: "categorize" and "one of", or the German equivalents.
    pub fn required_keywords(&self) -> [&'static str; 2] {
        match self {
            Language::En => ["categorize", "one of"],
            Language::De => ["kategorisiere", "eine der"],
        }
    }
}

impl std::str::FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "en" => Ok(Language::En),
            "de" => Ok(Language::De),
            other => Err(Error::template(format!("unknown language '{other}'"))),
        }
    }
}

/// Position of the content block relative to the class list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentOrder {
    /// Instruction, class list, then content at the end.
    TaskFirst,
    /// Instruction, content in the middle, class list after.
    ContentCentered,
}

impl SegmentOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentOrder::TaskFirst => "task-first",
            SegmentOrder::ContentCentered => "content-centered",
        }
    }
}

impl std::str::FromStr for SegmentOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "task-first" => Ok(SegmentOrder::TaskFirst),
            "content-centered" => Ok(SegmentOrder::ContentCentered),
            other => Err(Error::template(format!("unknown segment order '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    TaskText,
    ClassList,
    ContentBlock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub body: String,
}

pub const PLACEHOLDER_NAMES: [&str; 5] =
    ["classes", "content", "task_name", "description", "handbook"];

/// Content delimiter required around the {content} placeholder.
pub const CONTENT_DELIMITER: &str = "'''";

/// A validated prompt template. The body carries `{placeholder}` variables;
/// `{classes}` and `{content}` are substituted per render, the tier fields at
/// template level. The id is a 16-hex-char content hash over every field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    tier: PromptTier,
    language: Language,
    order: SegmentOrder,
    body: String,
    task_name: Option<String>,
    description: Option<String>,
    handbook: Option<String>,
    id: String,
}

/// One prompt ready for the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub template_id: String,
    pub sample_id: String,
    pub text: String,
    pub estimated_tokens: usize,
}

/// Deterministic token estimate: ceil(chars / 4). Documented as approximate;
/// endpoints remain the final authority.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

impl PromptTemplate {
    pub fn new(
        tier: PromptTier,
        language: Language,
        order: SegmentOrder,
        segments: Vec<Segment>,
        task_name: Option<String>,
        description: Option<String>,
        handbook: Option<String>,
    ) -> Result<Self> {
        let body = segments
            .iter()
            .map(|s| s.body.as_str())
            .collect::<Vec<_>>()
            .join("\n\n");
        Self::from_parts(tier, language, order, body, task_name, description, handbook)
    }

    fn from_parts(
        tier: PromptTier,
        language: Language,
        order: SegmentOrder,
        body: String,
        task_name: Option<String>,
        description: Option<String>,
        handbook: Option<String>,
    ) -> Result<Self> {
        validate_template(tier, language, &body, &task_name, &description, &handbook)?;
        let mut template = PromptTemplate {
            tier,
            language,
            order,
            body,
            task_name,
            description,
            handbook,
            id: String::new(),
        };
        template.id = content_hash(&template.to_file_string_without_id());
        Ok(template)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tier(&self) -> PromptTier {
        self.tier
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn order(&self) -> SegmentOrder {
        self.order
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Logical segment view of the body: blank-line separated chunks,
    /// classified by the placeholder they carry.
    pub fn segments(&self) -> Vec<Segment> {
        self.body
            .split("\n\n")
            .map(|chunk| {
                let kind = if chunk.contains("{content}") {
                    SegmentKind::ContentBlock
                } else if chunk.contains("{classes}") {
                    SegmentKind::ClassList
                } else {
                    SegmentKind::TaskText
                };
                Segment {
                    kind,
                    body: chunk.to_string(),
                }
            })
            .collect()
    }

    /// Substitute all placeholders for one sample. Pure: equal inputs yield
    /// byte-identical output.
    pub fn render(&self, sample: &Sample, classes: &[ClassLabel]) -> Result<RenderedPrompt> {
        if classes.is_empty() {
            return Err(Error::config("cannot render a prompt without classes"));
        }
        if sample.text.is_empty() {
            return Err(Error::data(format!(
                "sample '{}' has empty text",
                sample.id
            )));
        }
        let class_list = classes
            .iter()
            .map(|c| c.name())
            .collect::<Vec<_>>()
            .join(", ");

        let mut text = String::with_capacity(self.body.len() + sample.text.len());
        for piece in scan_placeholders(&self.body)? {
            match piece {
                Piece::Literal(s) => text.push_str(s),
                Piece::Placeholder(name) => match name {
                    "classes" => text.push_str(&class_list),
                    "content" => text.push_str(&sample.text),
                    "task_name" => text.push_str(self.require_field(name, &self.task_name)?),
                    "description" => text.push_str(self.require_field(name, &self.description)?),
                    "handbook" => text.push_str(self.require_field(name, &self.handbook)?),
                    other => {
                        return Err(Error::template(format!(
                            "unresolved placeholder '{{{other}}}'"
                        )))
                    }
                },
            }
        }

        let estimated_tokens = estimate_tokens(&text);
        Ok(RenderedPrompt {
            template_id: self.id.clone(),
            sample_id: sample.id.clone(),
            text,
            estimated_tokens,
        })
    }

    fn require_field<'a>(&self, name: &str, field: &'a Option<String>) -> Result<&'a str> {
        field.as_deref().ok_or_else(|| {
            Error::template(format!(
                "unresolved placeholder '{{{name}}}': template has no value for it"
            ))
        })
    }

    fn header_fields(&self) -> BTreeMap<&'static str, String> {
        let mut fields = BTreeMap::new();
        if let Some(v) = &self.task_name {
            fields.insert("task_name", v.clone());
        }
        if let Some(v) = &self.description {
            fields.insert("description", v.clone());
        }
        if let Some(v) = &self.handbook {
            fields.insert("handbook", v.clone());
        }
        fields
    }

    fn to_file_string_without_id(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("tier: {}\n", self.tier.as_str()));
        out.push_str(&format!("language: {}\n", self.language.as_str()));
        out.push_str(&format!("order: {}\n", self.order.as_str()));
        for (key, value) in self.header_fields() {
            // JSON string encoding keeps multi-line values on one header line.
            out.push_str(&format!(
                "{key}: {}\n",
                serde_json::to_string(&value).expect("string encodes")
            ));
        }
        out.push_str("---\n");
        out.push_str(&self.body);
        out.push('\n');
        out
    }

    /// Canonical file form: front-matter header lines, a `---` separator,
    /// then the body with placeholders.
    pub fn to_file_string(&self) -> String {
        self.to_file_string_without_id()
    }

    pub fn from_file_string(content: &str) -> Result<Self> {
        let Some((header, body)) = content.split_once("---\n") else {
            return Err(Error::template(
                "template file is missing the '---' header separator",
            ));
        };
        let mut tier = None;
        let mut language = None;
        let mut order = None;
        let mut task_name = None;
        let mut description = None;
        let mut handbook = None;
        for line in header.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once(':') else {
                return Err(Error::template(format!(
                    "malformed template header line '{line}'"
                )));
            };
            let value = value.trim();
            match key.trim() {
                "tier" => tier = Some(value.parse::<PromptTier>()?),
                "language" => language = Some(value.parse::<Language>()?),
                "order" => order = Some(value.parse::<SegmentOrder>()?),
                "task_name" => task_name = Some(decode_header_string(value)?),
                "description" => description = Some(decode_header_string(value)?),
                "handbook" => handbook = Some(decode_header_string(value)?),
                other => {
                    return Err(Error::template(format!(
                        "unknown template header key '{other}'"
                    )))
                }
            }
        }
        let tier = tier.ok_or_else(|| Error::template("template header missing 'tier'"))?;
        let language =
            language.ok_or_else(|| Error::template("template header missing 'language'"))?;
        let order = order.ok_or_else(|| Error::template("template header missing 'order'"))?;
        let body = body.strip_suffix('\n').unwrap_or(body).to_string();
        Self::from_parts(tier, language, order, body, task_name, description, handbook)
    }

    pub fn save_to_dir(&self, dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{}.prompt", self.id));
        std::fs::write(&path, self.to_file_string()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn decode_header_string(value: &str) -> Result<String> {
    serde_json::from_str::<String>(value)
        .map_err(|e| Error::template(format!("malformed header string {value}: {e}")))
}

fn content_hash(content: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(content.as_bytes());
    hex::encode(hasher.finalize())[..16].to_string()
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

/// Split a template body into literal runs and `{name}` placeholders.
/// Any brace sequence that is not a known placeholder is an error; inserted
/// values are never rescanned, so sample text may contain braces freely.
fn scan_placeholders(body: &str) -> Result<Vec<Piece<'_>>> {
    let mut pieces = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let (literal, after) = rest.split_at(open);
        if !literal.is_empty() {
            pieces.push(Piece::Literal(literal));
        }
        let Some(close) = after.find('}') else {
            return Err(Error::template(format!(
                "unterminated '{{' in template near '{}'",
                truncate_for_message(after)
            )));
        };
        let name = &after[1..close];
        if !PLACEHOLDER_NAMES.contains(&name) {
            return Err(Error::template(format!(
                "unresolved placeholder '{{{name}}}'"
            )));
        }
        pieces.push(Piece::Placeholder(name));
        rest = &after[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest));
    }
    Ok(pieces)
}

fn truncate_for_message(s: &str) -> &str {
    let end = s
        .char_indices()
        .nth(30)
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    &s[..end]
}

fn validate_template(
    tier: PromptTier,
    language: Language,
    body: &str,
    task_name: &Option<String>,
    description: &Option<String>,
    handbook: &Option<String>,
) -> Result<()> {
    let pieces = scan_placeholders(body)?;
    let mut content_count = 0usize;
    let mut classes_count = 0usize;
    for piece in &pieces {
        if let Piece::Placeholder(name) = piece {
            match *name {
                "content" => content_count += 1,
                "classes" => classes_count += 1,
                "task_name" if task_name.is_none() => {
                    return Err(Error::template(
                        "body references {task_name} but the template has none",
                    ))
                }
                "description" if description.is_none() => {
                    return Err(Error::template(
                        "body references {description} but the template has none",
                    ))
                }
                "handbook" if handbook.is_none() => {
                    return Err(Error::template(
                        "body references {handbook} but the template has none",
                    ))
                }
                _ => {}
            }
        }
    }
    if content_count != 1 {
        return Err(Error::template(format!(
            "template must reference {{content}} exactly once, found {content_count}"
        )));
    }
    if classes_count != 1 {
        return Err(Error::template(format!(
            "template must reference {{classes}} exactly once, found {classes_count}"
        )));
    }
    let delimited = format!("{CONTENT_DELIMITER}{{content}}{CONTENT_DELIMITER}");
    if !body.contains(&delimited) {
        return Err(Error::template(format!(
            "the {{content}} placeholder must be wrapped in {CONTENT_DELIMITER} delimiters"
        )));
    }

    let required: Option<&str> = match tier {
        PromptTier::Base => None,
        PromptTier::TaskName => Some("task_name"),
        PromptTier::Description => Some("description"),
        PromptTier::Handbook => Some("handbook"),
    };
    if let Some(field) = required {
        let value = match field {
            "task_name" => task_name,
            "description" => description,
            _ => handbook,
        };
        if value.as_deref().is_none_or(|v| v.trim().is_empty()) {
            return Err(Error::template(format!(
                "{} tier requires a non-empty {field}",
                tier.as_str()
            )));
        }
    }

    for keyword in language.required_keywords() {
        if !body.contains(keyword) {
            return Err(Error::template(format!(
                "template body must contain the keyword '{keyword}'"
            )));
        }
    }
    Ok(())
}

fn task_text(tier: PromptTier, language: Language) -> String {
    let (intro, description_line, handbook_line, instruction) = match language {
        Language::En => (
            "The task is {task_name}.",
            "Task description: {description}",
            "Annotation guidelines: {handbook}",
            "Please categorize the content below into one of the given classes.",
        ),
        Language::De => (
            "Die Aufgabe ist {task_name}.",
            "Aufgabenbeschreibung: {description}",
            "Annotationsrichtlinien: {handbook}",
            "Bitte kategorisiere den folgenden Inhalt in eine der vorgegebenen Klassen.",
        ),
    };
    match tier {
        PromptTier::Base => instruction.to_string(),
        PromptTier::TaskName => format!("{intro} {instruction}"),
        PromptTier::Description => format!("{intro} {description_line}\n{instruction}"),
        PromptTier::Handbook => {
            format!("{intro} {description_line}\n{handbook_line}\n{instruction}")
        }
    }
}

fn class_list_text(language: Language) -> &'static str {
    match language {
        Language::En => "Classes: {classes}",
        Language::De => "Klassen: {classes}",
    }
}

fn content_block_text() -> String {
    format!("{CONTENT_DELIMITER}{{content}}{CONTENT_DELIMITER}")
}

/// Build the canonical template suite: included tiers × two languages × two
/// segment orders. A tier is included only when every text field it stacks on
/// is non-empty, so rendered length grows monotonically with the tier.
pub fn builtin_suite(task_name: &str, description: &str, handbook: &str) -> Vec<PromptTemplate> {
    let mut tiers = vec![PromptTier::Base];
    if !task_name.trim().is_empty() {
        tiers.push(PromptTier::TaskName);
        if !description.trim().is_empty() {
            tiers.push(PromptTier::Description);
            if !handbook.trim().is_empty() {
                tiers.push(PromptTier::Handbook);
            }
        }
    }

    let mut templates = Vec::new();
    for tier in tiers {
        let needs_name = tier >= PromptTier::TaskName;
        let needs_description = tier >= PromptTier::Description;
        let needs_handbook = tier >= PromptTier::Handbook;
        for language in [Language::En, Language::De] {
            for order in [SegmentOrder::TaskFirst, SegmentOrder::ContentCentered] {
                let task = Segment {
                    kind: SegmentKind::TaskText,
                    body: task_text(tier, language),
                };
                let classes = Segment {
                    kind: SegmentKind::ClassList,
                    body: class_list_text(language).to_string(),
                };
                let content = Segment {
                    kind: SegmentKind::ContentBlock,
                    body: content_block_text(),
                };
                let segments = match order {
                    SegmentOrder::TaskFirst => vec![task, classes, content],
                    SegmentOrder::ContentCentered => vec![task, content, classes],
                };
                let template = PromptTemplate::new(
                    tier,
                    language,
                    order,
                    segments,
                    needs_name.then(|| task_name.to_string()),
                    needs_description.then(|| description.to_string()),
                    needs_handbook.then(|| handbook.to_string()),
                )
                .expect("builtin templates are valid by construction");
                templates.push(template);
            }
        }
    }
    templates
}

/// Load every `*.prompt` file from a directory, sorted by file name.
pub fn load_templates_dir(dir: &Path) -> Result<Vec<PromptTemplate>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "prompt"))
        .collect();
    paths.sort();
    let mut templates = Vec::with_capacity(paths.len());
    for path in paths {
        let content = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let template = PromptTemplate::from_file_string(&content)
            .map_err(|e| Error::template(format!("{}: {e}", path.display())))?;
        templates.push(template);
    }
    Ok(templates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(names: &[&str]) -> Vec<ClassLabel> {
        names.iter().map(|n| ClassLabel::new(*n).unwrap()).collect()
    }

    fn sample(id: &str, text: &str) -> Sample {
        Sample {
            id: id.into(),
            text: text.into(),
            gold: ClassLabel::new("A").unwrap(),
        }
    }

    fn base_en() -> PromptTemplate {
        builtin_suite("", "", "")
            .into_iter()
            .find(|t| t.language() == Language::En && t.order() == SegmentOrder::TaskFirst)
            .unwrap()
    }

    #[test]
    fn base_render_contains_keywords_classes_and_delimited_content() {
        let template = base_en();
        let rendered = template
            .render(&sample("s1", "hello"), &labels(&["A", "B"]))
            .unwrap();
        assert!(rendered.text.contains("one of"));
        assert!(rendered.text.contains("categorize"));
        assert!(rendered.text.contains("A, B"));
        assert!(rendered.text.contains("'''hello'''"));
    }

    #[test]
    fn oversized_handbook_still_renders() {
        let handbook = "richtlinie ".repeat(2000);
        let suite = builtin_suite("topic classification", "short description", &handbook);
        let template = suite
            .iter()
            .find(|t| t.tier() == PromptTier::Handbook && t.language() == Language::En)
            .unwrap();
        let text = "word ".repeat(100);
        let rendered = template
            .render(&sample("s1", text.trim()), &labels(&["A", "B"]))
            .unwrap();
        assert!(rendered.estimated_tokens > 512);
    }

    #[test]
    fn typo_placeholder_is_a_template_error() {
        let segments = vec![
            Segment {
                kind: SegmentKind::TaskText,
                body: "Please categorize {contnet} into one of the classes.".into(),
            },
            Segment {
                kind: SegmentKind::ClassList,
                body: "Classes: {classes}".into(),
            },
            Segment {
                kind: SegmentKind::ContentBlock,
                body: content_block_text(),
            },
        ];
        let err = PromptTemplate::new(
            PromptTier::Base,
            Language::En,
            SegmentOrder::TaskFirst,
            segments,
            None,
            None,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Template(_)));
        assert!(err.to_string().contains("contnet"), "{err}");
    }

    #[test]
    fn estimate_tokens_examples() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens(&"x".repeat(400)), 100);
        assert_eq!(estimate_tokens("sevench"), 2);
    }

    #[test]
    fn builtin_suite_has_sixteen_templates_and_four_tiers() {
        let suite = builtin_suite("topic classification", "desc", "handbook text");
        assert_eq!(suite.len(), 16);
        let tiers: std::collections::BTreeSet<_> = suite.iter().map(|t| t.tier()).collect();
        assert_eq!(tiers.len(), 4);
    }

    #[test]
    fn builtin_suite_ids_are_deterministic() {
        let a = builtin_suite("task", "desc", "hand");
        let b = builtin_suite("task", "desc", "hand");
        let ids_a: Vec<_> = a.iter().map(|t| t.id().to_string()).collect();
        let ids_b: Vec<_> = b.iter().map(|t| t.id().to_string()).collect();
        assert_eq!(ids_a, ids_b);
        assert!(ids_a.iter().all(|id| id.len() == 16));
    }

    #[test]
    fn empty_handbook_drops_handbook_tier() {
        let suite = builtin_suite("task", "desc", "");
        assert_eq!(suite.len(), 12);
        assert!(suite.iter().all(|t| t.tier() != PromptTier::Handbook));
    }

    #[test]
    fn rendered_length_is_nondecreasing_in_tier() {
        let suite = builtin_suite("topic classification", "finds the topic", "long guidelines");
        let s = sample("s1", "ein Beispieltext");
        let classes = labels(&["A", "B", "C"]);
        for language in [Language::En, Language::De] {
            for order in [SegmentOrder::TaskFirst, SegmentOrder::ContentCentered] {
                let mut lengths = Vec::new();
                for tier in PromptTier::ALL {
                    let t = suite
                        .iter()
                        .find(|t| {
                            t.tier() == tier && t.language() == language && t.order() == order
                        })
                        .unwrap();
                    lengths.push(t.render(&s, &classes).unwrap().text.len());
                }
                for pair in lengths.windows(2) {
                    assert!(pair[0] <= pair[1], "lengths not monotone: {lengths:?}");
                }
            }
        }
    }

    #[test]
    fn render_is_pure() {
        let template = base_en();
        let s = sample("s9", "{not a placeholder} content");
        let classes = labels(&["A", "B"]);
        let a = template.render(&s, &classes).unwrap();
        let b = template.render(&s, &classes).unwrap();
        assert_eq!(a, b);
        assert!(a.text.contains("{not a placeholder}"));
    }

    #[test]
    fn class_inventory_appears_exactly_once() {
        let suite = builtin_suite("task", "desc", "hand");
        let s = sample("s1", "inhalt");
        let classes = labels(&["Alpha", "Beta"]);
        for template in &suite {
            let rendered = template.render(&s, &classes).unwrap();
            assert_eq!(rendered.text.matches("Alpha, Beta").count(), 1);
        }
    }

    #[test]
    fn file_roundtrip_preserves_template_and_id() {
        let suite = builtin_suite("task name", "multi word description", "line one\nline two");
        for template in &suite {
            let serialized = template.to_file_string();
            let reloaded = PromptTemplate::from_file_string(&serialized).unwrap();
            assert_eq!(template, &reloaded);
            assert_eq!(template.id(), reloaded.id());
        }
    }

    #[test]
    fn save_and_load_dir() {
        let dir = tempfile::tempdir().unwrap();
        let suite = builtin_suite("task", "desc", "hand");
        for template in &suite {
            template.save_to_dir(dir.path()).unwrap();
        }
        let loaded = load_templates_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), suite.len());
        let mut expected: Vec<_> = suite.iter().map(|t| t.id().to_string()).collect();
        expected.sort();
        let got: Vec<_> = loaded.iter().map(|t| t.id().to_string()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn content_centered_order_puts_content_before_classes() {
        let suite = builtin_suite("", "", "");
        let centered = suite
            .iter()
            .find(|t| t.order() == SegmentOrder::ContentCentered && t.language() == Language::En)
            .unwrap();
        let kinds: Vec<SegmentKind> = centered.segments().iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![
                SegmentKind::TaskText,
                SegmentKind::ContentBlock,
                SegmentKind::ClassList
            ]
        );
    }

    proptest! {
        #[test]
        fn render_never_leaves_known_placeholders(text in "[a-zA-Z0-9 {}]{1,40}") {
            prop_assume!(!text.trim().is_empty());
            let template = base_en();
            let rendered = template.render(&sample("p", &text), &labels(&["A", "B"])).unwrap();
            let leftover_classes = rendered.text.contains("{classes}");
            let leftover_content = rendered.text.contains("{content}");
            prop_assert!(!leftover_classes && !leftover_content);
        }
    }
}
