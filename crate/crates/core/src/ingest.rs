//! Raw post parsing, communication-edge extraction, text cleaning and
//! dataset assembly.
//!
//! Posts arrive either as tweet-style JSONL or as a flat CSV with one post
//! per row. Edges are directed from the acting account (retweeter, replier,
//! mentioner) to the account acted upon. Accounts that never authored a post
//! are dropped together with their edges, and so are accounts left without
//! any edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use unicode_properties::{GeneralCategoryGroup, UnicodeEmoji, UnicodeGeneralCategory};

use crate::error::{Error, Result};

/// Words removed from every token stream.
pub const RESERVED_WORDS: &[&str] = &["rt", "via"];

/// Column layout of the flat post CSV.
pub const POST_CSV_HEADER: &[&str] = &[
    "post_id",
    "author_id",
    "author_screen_name",
    "text",
    "retweeted_author_id",
    "replied_author_id",
    "mentioned_author_ids",
    "timestamp",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostFormat {
    Jsonl,
    Csv,
}

impl FromStr for PostFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(PostFormat::Jsonl),
            "csv" => Ok(PostFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown post format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub post_id: String,
    pub author_id: String,
    pub author_screen_name: String,
    pub text: String,
    pub retweeted_author_id: Option<String>,
    pub replied_author_id: Option<String>,
    pub mentioned_author_ids: Vec<String>,
    pub timestamp: Option<String>,
}

/// Posts parsed from one stream plus the number of lines that were rejected.
#[derive(Debug, Clone, Default)]
pub struct ParsedPosts {
    pub posts: Vec<RawPost>,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeType {
    Mention,
    Retweet,
    Reply,
}

impl EdgeType {
    pub const ALL: [EdgeType; 3] = [EdgeType::Mention, EdgeType::Retweet, EdgeType::Reply];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Mention => "mention",
            EdgeType::Retweet => "retweet",
            EdgeType::Reply => "reply",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mention" => Ok(EdgeType::Mention),
            "retweet" => Ok(EdgeType::Retweet),
            "reply" => Ok(EdgeType::Reply),
            other => Err(Error::Format(format!("unknown edge type '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    #[serde(rename = "type")]
    pub edge_type: EdgeType,
    pub weight: u64,
}

impl EdgeRecord {
    pub fn new(source: impl Into<String>, target: impl Into<String>, edge_type: EdgeType, weight: u64) -> Self {
        EdgeRecord { source: source.into(), target: target.into(), edge_type, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountRecord {
    pub account_id: String,
    pub screen_name: String,
    pub raw_text: String,
    pub clean_text: Vec<String>,
    pub n_posts: usize,
    pub retweet_fraction: f64,
}

impl AccountRecord {
    /// Most frequent hashtags in the raw text, ties broken alphabetically.
    pub fn top_hashtags(&self, limit: usize) -> Vec<String> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for token in self.raw_text.split_whitespace() {
            if let Some(rest) = token.strip_prefix('#') {
                let tag: String = rest
                    .chars()
                    .take_while(|c| keep_char(*c))
                    .flat_map(char::to_lowercase)
                    .collect();
                if !tag.is_empty() {
                    *counts.entry(format!("#{tag}")).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.into_iter().take(limit).map(|(t, _)| t).collect()
    }
}

/// Parse a stream of posts. Malformed lines are skipped and counted; more
/// than half malformed is treated as a wrong format.
pub fn parse_posts<R: Read>(input: R, format: PostFormat) -> Result<ParsedPosts> {
    let parsed = match format {
        PostFormat::Jsonl => parse_jsonl(input)?,
        PostFormat::Csv => parse_csv(input)?,
    };
    let total = parsed.posts.len() + parsed.skipped;
    if total > 0 && parsed.skipped * 2 > total {
        return Err(Error::Format(format!(
            "{} of {} records malformed; is the format right?",
            parsed.skipped, total
        )));
    }
    Ok(parsed)
}

fn parse_jsonl<R: Read>(input: R) -> Result<ParsedPosts> {
    let mut out = ParsedPosts::default();
    for line in BufReader::new(input).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line).ok().and_then(|v| post_from_json(&v)) {
            Some(post) => out.posts.push(post),
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

fn json_str(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.is_empty())
}

fn post_from_json(v: &Value) -> Option<RawPost> {
    let post_id = non_empty(json_str(v.get("id_str")).or_else(|| json_str(v.get("id"))))?;
    let user = v.get("user")?;
    let author_id = non_empty(json_str(user.get("id_str")).or_else(|| json_str(user.get("id"))))?;
    let author_screen_name = json_str(user.get("screen_name")).unwrap_or_default();
    let text = json_str(v.get("full_text")).or_else(|| json_str(v.get("text")))?;
    let retweeted_author_id = v
        .get("retweeted_status")
        .and_then(|rt| rt.get("user"))
        .and_then(|u| non_empty(json_str(u.get("id_str"))));
    let replied_author_id = non_empty(json_str(v.get("in_reply_to_user_id_str")));
    let mut mentioned = Vec::new();
    if let Some(list) = v.pointer("/entities/user_mentions").and_then(Value::as_array) {
        for m in list {
            if let Some(id) = non_empty(json_str(m.get("id_str"))) {
                mentioned.push(id);
            }
        }
    }
    Some(RawPost {
        post_id,
        author_id,
        author_screen_name,
        text,
        retweeted_author_id,
        replied_author_id,
        mentioned_author_ids: dedup_preserving_order(mentioned),
        timestamp: non_empty(json_str(v.get("created_at")).or_else(|| json_str(v.get("timestamp")))),
    })
}

fn dedup_preserving_order(ids: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    ids.into_iter().filter(|id| seen.insert(id.clone())).collect()
}

fn parse_csv<R: Read>(input: R) -> Result<ParsedPosts> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let cols: Vec<Option<usize>> = POST_CSV_HEADER.iter().map(|h| col(h)).collect();
    if cols[0].is_none() || cols[1].is_none() || cols[3].is_none() {
        return Err(Error::Format("post CSV needs post_id, author_id and text columns".into()));
    }
    let mut out = ParsedPosts::default();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        if record.len() != headers.len() {
            out.skipped += 1;
            continue;
        }
        let field = |i: usize| cols[i].and_then(|c| record.get(c)).map(str::to_string);
        let post_id = non_empty(field(0));
        let author_id = non_empty(field(1));
        let (Some(post_id), Some(author_id)) = (post_id, author_id) else {
            out.skipped += 1;
            continue;
        };
        let mentions = field(6)
            .unwrap_or_default()
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        out.posts.push(RawPost {
            post_id,
            author_id,
            author_screen_name: field(2).unwrap_or_default(),
            text: field(3).unwrap_or_default(),
            retweeted_author_id: non_empty(field(4)),
            replied_author_id: non_empty(field(5)),
            mentioned_author_ids: dedup_preserving_order(mentions),
            timestamp: non_empty(field(7)),
        });
    }
    Ok(out)
}

/// Write posts in the flat CSV layout read by [`parse_posts`].
pub fn write_posts_csv<W: Write>(out: W, posts: &[RawPost]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POST_CSV_HEADER)?;
    for p in posts {
        let mentions = p.mentioned_author_ids.join(";");
        w.write_record([
            p.post_id.as_str(),
            p.author_id.as_str(),
            p.author_screen_name.as_str(),
            p.text.as_str(),
            p.retweeted_author_id.as_deref().unwrap_or(""),
            p.replied_author_id.as_deref().unwrap_or(""),
            mentions.as_str(),
            p.timestamp.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Serialize one post as a tweet-style JSON object.
pub fn post_to_json(p: &RawPost) -> Value {
    let mut obj = serde_json::json!({
        "id": p.post_id,
        "user": {"id_str": p.author_id, "screen_name": p.author_screen_name},
        "text": p.text,
        "entities": {"user_mentions": p.mentioned_author_ids.iter().map(|id| serde_json::json!({"id_str": id})).collect::<Vec<_>>()},
    });
    if let Some(rt) = &p.retweeted_author_id {
        obj["retweeted_status"] = serde_json::json!({"user": {"id_str": rt}});
    }
    if let Some(reply) = &p.replied_author_id {
        obj["in_reply_to_user_id_str"] = Value::String(reply.clone());
    }
    if let Some(ts) = &p.timestamp {
        obj["created_at"] = Value::String(ts.clone());
    }
    obj
}

/// Collapse interactions into typed, weighted edges. Only top-level mention
/// entities are counted.
pub fn build_edges(posts: &[RawPost]) -> Vec<EdgeRecord> {
    let mut counts: BTreeMap<(String, String, EdgeType), u64> = BTreeMap::new();
    let mut add = |source: &str, target: &str, kind: EdgeType| {
        if source != target {
            *counts.entry((source.to_string(), target.to_string(), kind)).or_default() += 1;
        }
    };
    for post in posts {
        if let Some(rt) = &post.retweeted_author_id {
            add(&post.author_id, rt, EdgeType::Retweet);
        }
        if let Some(reply) = &post.replied_author_id {
            add(&post.author_id, reply, EdgeType::Reply);
        }
        for m in &post.mentioned_author_ids {
            add(&post.author_id, m, EdgeType::Mention);
        }
    }
    counts
        .into_iter()
        .map(|((source, target, edge_type), weight)| EdgeRecord { source, target, edge_type, weight })
        .collect()
}

fn is_emoji_like(c: char) -> bool {
    // ASCII digits, '#' and '*' carry the Emoji property as keycap bases.
    !c.is_ascii() && c.is_emoji_char_or_emoji_component()
}

fn keep_char(c: char) -> bool {
    matches!(
        c.general_category_group(),
        GeneralCategoryGroup::Letter | GeneralCategoryGroup::Mark | GeneralCategoryGroup::Number
    ) && !is_emoji_like(c)
}

fn is_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.starts_with("http://")
        || lower.starts_with("https://")
        || lower.starts_with("www.")
        || lower.starts_with("t.co/")
        || lower.contains("://")
}

/// Tokenize and clean a text.
///
/// URLs, punctuation, symbols, emoji and the reserved words are removed and
/// everything is lowercased. Punctuation inside a token splits it, except
/// apostrophes which are dropped in place. A leading `#` or `@` survives as
/// a tag marker unless `strip_tags` is set, in which case the whole tag is
/// removed.
pub fn clean_text(raw: &str, strip_tags: bool) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in raw.split_whitespace() {
        if is_url(word) {
            continue;
        }
        let (marker, body) = match word.chars().next() {
            Some(m @ ('#' | '@')) => (Some(m), &word[m.len_utf8()..]),
            _ => (None, word),
        };
        if marker.is_some() && strip_tags {
            continue;
        }
        let mut pieces: Vec<String> = vec![String::new()];
        for c in body.chars() {
            if keep_char(c) {
                pieces.last_mut().unwrap().extend(c.to_lowercase());
            } else if c == '\'' || c == '\u{2019}' || is_emoji_like(c) {
                continue;
            } else if !pieces.last().unwrap().is_empty() {
                pieces.push(String::new());
            }
        }
        for (i, piece) in pieces.into_iter().enumerate() {
            if piece.is_empty() {
                continue;
            }
            let token = match marker {
                Some(m) if i == 0 => format!("{m}{piece}"),
                _ => piece,
            };
            if RESERVED_WORDS.contains(&token.as_str()) {
                continue;
            }
            tokens.push(token);
        }
    }
    tokens
}

/// Counts reported when assembly prunes everything away.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssemblyDiagnostics {
    pub authors: usize,
    pub edges_in: usize,
    pub edges_kept: usize,
    pub isolates_removed: usize,
}

/// Group posts per author, drop edges to non-authors, then drop isolates
/// until nothing changes. Output is sorted by account id and by edge key.
pub fn assemble_dataset(
    posts: &[RawPost],
    edges: &[EdgeRecord],
    strip_tags: bool,
) -> Result<(Vec<AccountRecord>, Vec<EdgeRecord>)> {
    struct Acc<'a> {
        screen_name: &'a str,
        texts: Vec<&'a str>,
        retweets: usize,
    }
    let mut by_author: BTreeMap<&str, Acc> = BTreeMap::new();
    for post in posts {
        let acc = by_author.entry(post.author_id.as_str()).or_insert(Acc {
            screen_name: &post.author_screen_name,
            texts: Vec::new(),
            retweets: 0,
        });
        if acc.screen_name.is_empty() {
            acc.screen_name = &post.author_screen_name;
        }
        acc.texts.push(&post.text);
        if post.retweeted_author_id.is_some() {
            acc.retweets += 1;
        }
    }
    let accounts: Vec<AccountRecord> = by_author
        .into_iter()
        .map(|(id, acc)| {
            let raw_text = acc.texts.join("\n");
            let clean = clean_text(&raw_text, strip_tags);
            AccountRecord {
                account_id: id.to_string(),
                screen_name: acc.screen_name.to_string(),
                n_posts: acc.texts.len(),
                retweet_fraction: acc.retweets as f64 / acc.texts.len() as f64,
                clean_text: clean,
                raw_text,
            }
        })
        .collect();
    prune(accounts, edges)
}

/// Apply the author and isolate pruning rules to already-built records.
pub fn prune(accounts: Vec<AccountRecord>, edges: &[EdgeRecord]) -> Result<(Vec<AccountRecord>, Vec<EdgeRecord>)> {
    let authors = accounts.len();
    let mut accounts = accounts;
    accounts.sort_by(|a, b| a.account_id.cmp(&b.account_id));
    accounts.dedup_by(|a, b| a.account_id == b.account_id);

    let mut merged: BTreeMap<(String, String, EdgeType), u64> = BTreeMap::new();
    for e in edges {
        if e.source != e.target && e.weight > 0 {
            *merged.entry((e.source.clone(), e.target.clone(), e.edge_type)).or_default() += e.weight;
        }
    }
    let mut edges: Vec<EdgeRecord> = merged
        .into_iter()
        .map(|((source, target, edge_type), weight)| EdgeRecord { source, target, edge_type, weight })
        .collect();
    let edges_in = edges.len();

    let mut isolates_removed = 0;
    loop {
        let keep: BTreeSet<&str> = accounts.iter().map(|a| a.account_id.as_str()).collect();
        let before_edges = edges.len();
        edges.retain(|e| keep.contains(e.source.as_str()) && keep.contains(e.target.as_str()));
        let mut degree: HashMap<&str, usize> = HashMap::new();
        for e in &edges {
            *degree.entry(e.source.as_str()).or_default() += 1;
            *degree.entry(e.target.as_str()).or_default() += 1;
        }
        let before_accounts = accounts.len();
        accounts.retain(|a| degree.contains_key(a.account_id.as_str()));
        isolates_removed += before_accounts - accounts.len();
        if accounts.len() == before_accounts && edges.len() == before_edges {
            break;
        }
    }

    if accounts.is_empty() {
        let diag = AssemblyDiagnostics { authors, edges_in, edges_kept: edges.len(), isolates_removed };
        return Err(Error::Dataset(format!(
            "no accounts left after pruning (authors={}, edges={}, kept edges={}, isolates removed={})",
            diag.authors, diag.edges_in, diag.edges_kept, diag.isolates_removed
        )));
    }
    Ok((accounts, edges))
}

/// Read an edge list with header `source,target,type,weight`.
pub fn read_edges_csv<R: Read>(input: R) -> Result<Vec<EdgeRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() < 3 {
            return Err(Error::Format(format!("edge row {} has {} columns", i + 1, row.len())));
        }
        let weight = match row.get(3).map(str::trim) {
            None | Some("") => 1,
            Some(w) => w
                .parse::<u64>()
                .map_err(|_| Error::Format(format!("edge row {}: bad weight '{w}'", i + 1)))?,
        };
        if weight == 0 {
            return Err(Error::Format(format!("edge row {}: weight must be positive", i + 1)));
        }
        out.push(EdgeRecord::new(row[0].trim(), row[1].trim(), row[2].parse()?, weight));
    }
    Ok(out)
}

pub fn write_edges_csv<W: Write>(out: W, edges: &[EdgeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "target", "type", "weight"])?;
    for e in edges {
        w.write_record([e.source.as_str(), e.target.as_str(), e.edge_type.as_str(), &e.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read `node_id,text` rows. Repeated ids have their texts concatenated.
pub fn read_node_text_csv<R: Read>(input: R) -> Result<Vec<(String, String)>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut texts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let id = row.get(0).unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::Format("node text row without node_id".into()));
        }
        texts.entry(id.to_string()).or_default().push(row.get(1).unwrap_or("").to_string());
    }
    Ok(texts.into_iter().map(|(id, t)| (id, t.join("\n"))).collect())
}

pub fn write_node_text_csv<W: Write>(out: W, rows: &[(String, String)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "text"])?;
    for (id, text) in rows {
        w.write_record([id, text])?;
    }
    w.flush()?;
    Ok(())
}

/// Build a dataset from the generic CSV corpus: an edge list plus one text
/// per node. Nodes without text count as non-authors.
pub fn assemble_from_csv_corpus(
    node_texts: &[(String, String)],
    edges: &[EdgeRecord],
    strip_tags: bool,
) -> Result<(Vec<AccountRecord>, Vec<EdgeRecord>)> {
    let accounts = node_texts
        .iter()
        .map(|(id, text)| AccountRecord {
            account_id: id.clone(),
            screen_name: String::new(),
            raw_text: text.clone(),
            clean_text: clean_text(text, strip_tags),
            n_posts: 1,
            retweet_fraction: 0.0,
        })
        .collect();
    prune(accounts, edges)
}
