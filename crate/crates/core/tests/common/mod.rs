#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const T0: i64 = 1_451_606_400;

pub fn comment(id: &str, author: &str, subreddit: &str, body: &str) -> String {
    json!({"id": id, "author": author, "subreddit": subreddit, "created_utc": T0, "body": body}).to_string()
}

pub fn write_lines(path: &Path, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).unwrap();
}

pub const BACKGROUND: [&str; 40] = [
    "game", "team", "music", "food", "weather", "phone", "car", "movie", "book", "school", "work", "money",
    "house", "city", "dog", "cat", "coffee", "beer", "garden", "travel", "code", "computer", "election",
    "vote", "news", "photo", "camera", "sport", "ball", "run", "bike", "paint", "art", "song", "band",
    "guitar", "kitchen", "recipe", "market", "price",
];
pub const SEED: &str = "heroin";
pub const SLANG: [&str; 5] = ["dopesick", "fent", "nodding", "roxies", "subs"];
pub const PLANTED: [&str; 3] = ["opiates", "opiatesrecovery", "suboxone"];
pub const BACKGROUND_DOCS: usize = 50;
pub const ENTRIES_PER_DOC: usize = 120;
/// Background document that mentions the seed now and then.
pub const NEWS_DOC: &str = "bg07";

pub struct PlantedFixture {
    pub dump: PathBuf,
    pub allowlist: PathBuf,
    pub documents: usize,
}

fn entry_words(rng: &mut ChaCha8Rng, doc: &str, third_has_seed: bool) -> Vec<&'static str> {
    let mut words: Vec<&'static str> = (0..12).map(|_| *BACKGROUND.choose(rng).unwrap()).collect();
    match PLANTED.iter().position(|p| *p == doc) {
        Some(i) => {
            for slot in words.iter_mut().take(4) {
                *slot = SLANG.choose(rng).unwrap();
            }
            let seed_rate = if i < 2 { 1.0 } else if third_has_seed { 0.1 } else { 0.0 };
            if rng.gen_bool(seed_rate) {
                words[5] = SEED;
            }
        }
        None => {
            if doc == NEWS_DOC && rng.gen_bool(0.02) {
                words[0] = SEED;
            }
            if rng.gen_bool(0.02) {
                words[1] = "subs";
            }
        }
    }
    words.shuffle(rng);
    words
}

/// Three topical documents sharing five slang terms among fifty background
/// documents, each with 120 entries. The first two planted documents use
/// the seed term in every entry; the third uses it rarely or, when
/// `third_has_seed` is false, never. Also writes an allowlist naming the
/// slang terms and a few words absent from the corpus.
pub fn planted_corpus(dir: &Path, third_has_seed: bool) -> PlantedFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut docs: Vec<String> = (0..BACKGROUND_DOCS).map(|i| format!("bg{i:02}")).collect();
    docs.extend(PLANTED.iter().map(|s| s.to_string()));
    let mut lines = Vec::new();
    for doc in &docs {
        for e in 0..ENTRIES_PER_DOC {
            let author = format!("u_{doc}_{}", e % 15);
            let text = entry_words(&mut rng, doc, third_has_seed).join(" ");
            lines.push(comment(&format!("{doc}_{e}"), &author, doc, &text));
        }
    }
    // below the entry threshold
    for e in 0..40 {
        lines.push(comment(&format!("tiny_{e}"), "u_tiny", "tinysub", "heroin fent subs"));
    }
    lines.push("{not json".into());
    lines.push(comment("del", "[deleted]", "opiates", "heroin heroin"));
    lines.shuffle(&mut rng);

    let dump = dir.join("planted.ndjson");
    write_lines(&dump, &lines);
    let allowlist = dir.join("allow.txt");
    let mut allow = vec!["# planted slang".to_string()];
    allow.extend(SLANG.iter().map(|s| s.to_string()));
    allow.push("bth".into());
    write_lines(&allowlist, &allow);
    PlantedFixture {
        dump,
        allowlist,
        documents: docs.len(),
    }
}

/// Randomized dump lines: comments and submissions over a few dozen
/// documents, with malformed lines, deleted authors and flairs mixed in.
pub fn random_dump(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..300).map(|i| format!("w{i:03}")).collect();
    (0..n)
        .map(|i| {
            let r: f64 = rng.gen();
            if r < 0.01 {
                return format!("{{\"broken\": {i}");
            }
            let doc = format!("sub{:02}", (rng.gen::<f64>().powi(2) * 40.0) as usize);
            let author = if r < 0.03 {
                "[deleted]".to_string()
            } else {
                format!("a{}", rng.gen_range(0..400))
            };
            // zipf-ish word choice
            let len = rng.gen_range(1..25);
            let text: Vec<&str> = (0..len)
                .map(|_| words[(rng.gen::<f64>().powi(3) * 300.0) as usize].as_str())
                .collect();
            let ts = T0 + rng.gen_range(0..86_400 * 365);
            if rng.gen_bool(0.3) {
                let cut = text.len() / 2;
                json!({"id": format!("t3_{i}"), "author": author, "subreddit": doc, "created_utc": ts,
                       "title": text[..cut].join(" "), "selftext": text[cut..].join(" ")})
                .to_string()
            } else {
                json!({"id": format!("t1_{i}"), "author": author, "subreddit": doc, "created_utc": ts,
                       "body": text.join(" "), "author_flair_text": if rng.gen_bool(0.1) { "Texas" } else { "" }})
                .to_string()
            }
        })
        .collect()
}

pub struct GeoFixture {
    pub dump: PathBuf,
    pub gazetteer: PathBuf,
    pub flairs: PathBuf,
    pub locations: PathBuf,
    pub window: (i64, i64),
    /// author, state code or "", basis or "".
    pub expected: Vec<(&'static str, &'static str, &'static str)>,
}

pub const GAZETTEER: &str = "name\tstate_code\tpopulation\talternates
Newark\tCA\t47000
Newark\tNJ\t280000
New York\tNY\t8400000\tBig Apple|NYC
Columbus\tOH\t900000
Columbus\tGA\t206000
Kansas City\tMO\t500000
Kansas City\tKS\t150000
Springfield\tIL\t116000
Smallville\tKS\t5000
Portland\tOR\t650000
Portland\tME\t68000
";

pub const FLAIRS: &str = "subreddit,flair_text,state_code
nfl,Chicago Bears,IL
nfl,Giants,NY
nba,Lakers,CA
college,Buckeyes,OH
";

pub const LOCATIONS: &str = "subreddit,state_code
chicago,IL
nyc,NY
texas,TX
austin,TX
seattle,WA
ohio,OH
";

/// Thirty authors, each exercising one resolution or merge rule.
pub fn geo_fixture(dir: &Path) -> GeoFixture {
    let mut lines = Vec::new();
    let mut n = 0;
    let mut post = |author: &str, sub: &str, body: &str, flair: Option<&str>, ts: i64| {
        n += 1;
        let mut v = json!({"id": format!("g{n}"), "author": author, "subreddit": sub, "created_utc": ts, "body": body});
        if let Some(f) = flair {
            v["author_flair_text"] = json!(f);
        }
        lines.push(v.to_string());
    };
    let say = |p: &mut dyn FnMut(&str, &str, &str, Option<&str>, i64), a: &str, text: &str| p(a, "askreddit", text, None, T0);
    let flair = |p: &mut dyn FnMut(&str, &str, &str, Option<&str>, i64), a: &str, sub: &str, f: &str, k: usize| {
        for _ in 0..k {
            p(a, sub, "go team", Some(f), T0)
        }
    };
    let local = |p: &mut dyn FnMut(&str, &str, &str, Option<&str>, i64), a: &str, sub: &str, k: usize| {
        for _ in 0..k {
            p(a, sub, "anyone know a good taco place", None, T0)
        }
    };

    say(&mut post, "a01", "I live in Newark, CA and bike to work");
    say(&mut post, "a02", "I live in Newark. Traffic is bad");
    say(&mut post, "a03", "Honestly I live in the Big Apple now");
    say(&mut post, "a04", "i live in texas");
    say(&mut post, "a05", "I live in Columbus");
    say(&mut post, "a06", "I live in Columbus, Ohio");
    say(&mut post, "a07", "I live in Kansas City, Kansas");
    say(&mut post, "a08", "I live in Ohio.");
    say(&mut post, "a08", "Actually I live in Texas");
    say(&mut post, "a09", "I live in Ohio");
    say(&mut post, "a09", "I live in Texas");
    flair(&mut post, "a09", "nfl", "Chicago Bears", 1);
    say(&mut post, "a10", "I live in NYC");
    say(&mut post, "a10", "like I said, I live in NYC!");
    say(&mut post, "a11", "I live in Portland");
    flair(&mut post, "a11", "nba", "Lakers", 3);
    say(&mut post, "a12", "I live in Springfield, IL");
    local(&mut post, "a12", "texas", 5);
    flair(&mut post, "a13", "nfl", "Giants", 2);
    flair(&mut post, "a14", "nfl", "Giants", 1);
    flair(&mut post, "a14", "nba", "Lakers", 1);
    local(&mut post, "a15", "Seattle", 3);
    local(&mut post, "a16", "chicago", 2);
    local(&mut post, "a16", "austin", 2);
    local(&mut post, "a17", "texas", 2);
    local(&mut post, "a17", "austin", 1);
    local(&mut post, "a17", "seattle", 2);
    flair(&mut post, "a18", "nfl", "Chicago Bears", 1);
    local(&mut post, "a18", "chicago", 1);
    flair(&mut post, "a19", "nfl", "Giants", 2);
    local(&mut post, "a19", "texas", 1);
    local(&mut post, "a19", "austin", 2);
    flair(&mut post, "a20", "nba", "Lakers", 2);
    local(&mut post, "a20", "seattle", 2);
    flair(&mut post, "a21", "nfl", "Giants", 1);
    flair(&mut post, "a21", "nba", "Lakers", 1);
    local(&mut post, "a21", "nyc", 1);
    local(&mut post, "a22", "chicago", 1);
    local(&mut post, "a22", "ohio", 1);
    flair(&mut post, "a22", "college", "Buckeyes", 1);
    say(&mut post, "a23", "I live in WA");
    say(&mut post, "a24", "I live in wa");
    say(&mut post, "a25", "I live in a small town near Smallville, KS and love it");
    say(&mut post, "a26", "I live in Seattle. Texas is great");
    local(&mut post, "a26", "seattle", 1);
    flair(&mut post, "a27", "baseball", "Giants", 3);
    flair(&mut post, "a27", "NFL", "Giants", 1);
    post("a28", "askreddit", "I live in Texas", None, T0 - 86_400);
    post("a28", "texas", "anyone know a good taco place", None, T0 - 86_400);
    say(&mut post, "a29", "I live in Newark or Portland");
    say(&mut post, "a30", "I live in Kansas City");
    // noise that must not create authors
    post("[deleted]", "texas", "I live in Texas", None, T0);
    lines.push("garbage line".into());

    let dump = dir.join("geo.ndjson");
    write_lines(&dump, &lines);
    let gazetteer = dir.join("gazetteer.tsv");
    std::fs::write(&gazetteer, GAZETTEER).unwrap();
    let flairs = dir.join("flairs.csv");
    std::fs::write(&flairs, FLAIRS).unwrap();
    let locations = dir.join("locations.csv");
    std::fs::write(&locations, LOCATIONS).unwrap();

    GeoFixture {
        dump,
        gazetteer,
        flairs,
        locations,
        window: (T0 - 3600, T0 + 3600),
        expected: vec![
            ("a01", "CA", "self_report"),
            ("a02", "NJ", "self_report"),
            ("a03", "NY", "self_report"),
            ("a04", "TX", "self_report"),
            ("a05", "", ""),
            ("a06", "OH", "self_report"),
            ("a07", "KS", "self_report"),
            ("a08", "", ""),
            ("a09", "IL", "flair"),
            ("a10", "NY", "self_report"),
            ("a11", "OR", "self_report"),
            ("a12", "IL", "self_report"),
            ("a13", "NY", "flair"),
            ("a14", "", ""),
            ("a15", "WA", "location_subreddit"),
            ("a16", "", ""),
            ("a17", "TX", "location_subreddit"),
            ("a18", "IL", "combined"),
            ("a19", "TX", "combined"),
            ("a20", "", ""),
            ("a21", "NY", "combined"),
            ("a22", "OH", "combined"),
            ("a23", "WA", "self_report"),
            ("a24", "", ""),
            ("a25", "KS", "self_report"),
            ("a26", "WA", "location_subreddit"),
            ("a27", "NY", "flair"),
            ("a28", "", ""),
            ("a29", "", ""),
            ("a30", "MO", "self_report"),
        ],
    }
}

/// Minimal blocking HTTP/1.1 client; returns status and body.
pub fn http(addr: &str, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
    let body = body.unwrap_or("");
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let text = String::from_utf8(raw).unwrap();
    let (head, rest) = text.split_once("\r\n\r\n").unwrap();
    let status: u16 = head.split(' ').nth(1).unwrap().parse().unwrap();
    let body = if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        dechunk(rest)
    } else {
        rest.to_string()
    };
    (status, body)
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = s.split_once("\r\n").unwrap();
        let n = usize::from_str_radix(size.trim(), 16).unwrap();
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
}

pub fn wait_for_port(addr: &str, timeout: Duration) {
    let start = Instant::now();
    while TcpStream::connect(addr).is_err() {
        assert!(start.elapsed() < timeout, "server at {addr} did not start");
        std::thread::sleep(Duration::from_millis(20));
    }
}

pub fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_cohort"))
}
