//! A planted three-class corpus (countries, cities, presidents) for
//! end-to-end checks and demos.
//!
//! Every mention sits inside a fixed template with three context tokens on
//! each side, so skip-grams are shared exactly across entities. Templates are
//! either exclusive to one class or ambiguous between countries and one of
//! the other classes. Documents are topical: a document about a country also
//! mentions that country's cities and presidents. Only the three seed
//! countries own cities and presidents (plus one extra city and president
//! owned by a fourth country); the remaining countries are rarely mentioned.
//!
//! The fixture also ships per-entity centroids modelled on contextual
//! embeddings averaged over mentions: class centre plus per-mention noise,
//! so an entity's spread shrinks as `1/sqrt(mentions)`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{joined_name, Corpus, DocumentRecord, MentionRecord};
use crate::embedding::CentroidProvider;
use crate::error::{Error, Result};
use crate::evalkit::{Query, TruthRecord};
use crate::rng::fork_rng;

pub const COUNTRIES: [&str; 10] = [
    "arland", "borvia", "caldor", "dorvik", "elmira", "fendal", "galtor", "harnia", "istmar", "jorvel",
];
pub const CITIES: [&str; 10] = [
    "akton", "brisk", "colvey", "dunmere", "eskar", "fallow", "grint", "holm", "irby", "jessop",
];
pub const PRESIDENTS: [&str; 10] = [
    "anton vale", "bruno kast", "celia morn", "dario fenn", "edda roon", "felix tarn", "greta lund",
    "hugo brandt", "ines valk", "jonas pell",
];

/// Seeds of the fixture query.
pub const SEED_COUNTRIES: [&str; 3] = ["arland", "borvia", "caldor"];

const COUNTRY_ONLY: [&str; 5] = [
    "the embassy of __ reopened last week",
    "trade talks with __ resumed on monday",
    "the flag of __ was raised again",
    "the constitution of __ was amended twice",
    "the economy of __ grew by percent",
];
const CITY_ONLY: [&str; 5] = [
    "the mayor of __ opened a bridge",
    "traffic in downtown __ was heavy today",
    "the subway in __ closed for repairs",
    "residents of suburban __ complained about noise",
    "the harbor of __ froze this winter",
];
const PRESIDENT_ONLY: [&str; 5] = [
    "the speech by __ drew loud applause",
    "a spokesman for __ denied the report",
    "the cabinet of __ met in private",
    "the veto by __ angered the lawmakers",
    "the memoir of __ became a bestseller",
];
const COUNTRY_CITY: [&str; 2] = [
    "tourists flocked to __ during the summer",
    "heavy snow fell in __ over the weekend",
];
const COUNTRY_PRESIDENT: [&str; 2] = [
    "officials said that __ would not comment",
    "a statement from __ criticized the decision",
];
const FILLER: [&str; 24] = [
    "markets", "rallied", "after", "the", "report", "analysts", "expected", "growth", "to", "slow",
    "in", "coming", "months", "while", "prices", "rose", "sharply", "across", "several", "sectors",
    "and", "investors", "remained", "cautious",
];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    Country,
    City,
    President,
}

impl Class {
    pub fn label(self) -> &'static str {
        match self {
            Class::Country => "country",
            Class::City => "city",
            Class::President => "president",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_docs: usize,
    /// Share of documents about a seed country.
    pub seed_topic_share: f64,
    pub centroid_dim: usize,
    /// Norm of each class centre.
    pub centroid_separation: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            n_docs: 2000,
            seed_topic_share: 0.75,
            centroid_dim: 64,
            centroid_separation: 4.0,
        }
    }
}

pub struct Fixture {
    pub documents: Vec<DocumentRecord>,
    pub centroids: Vec<(String, Vec<f64>)>,
}

/// Class of every planted entity.
pub fn classes() -> HashMap<&'static str, Class> {
    let mut m = HashMap::new();
    for c in COUNTRIES {
        m.insert(c, Class::Country);
    }
    for c in CITIES {
        m.insert(c, Class::City);
    }
    for p in PRESIDENTS {
        m.insert(p, Class::President);
    }
    m
}

/// Owner country index of city or president `i`.
fn owner(i: usize) -> usize {
    if i < 9 {
        i / 3
    } else {
        3
    }
}

struct Writer {
    tokens: Vec<String>,
    mentions: Vec<MentionRecord>,
}

impl Writer {
    fn sentence(&mut self, template: &str, entity: &str) {
        for word in template.split(' ') {
            if word == "__" {
                let start = self.tokens.len();
                self.tokens.extend(entity.split(' ').map(str::to_owned));
                self.mentions.push(MentionRecord {
                    entity: entity.to_owned(),
                    start,
                    end: self.tokens.len(),
                });
            } else {
                self.tokens.push(word.to_owned());
            }
        }
        self.tokens.push(".".to_owned());
    }

    fn filler<R: Rng>(&mut self, rng: &mut R) {
        let n = rng.gen_range(6..=10);
        for _ in 0..n {
            self.tokens.push(FILLER.choose(rng).unwrap().to_string());
        }
        self.tokens.push(".".to_owned());
    }
}

fn pick<'a, R: Rng>(rng: &mut R, exclusive: &[&'a str], shared: &[&'a str]) -> &'a str {
    if rng.gen_bool(0.6) {
        exclusive.choose(rng).unwrap()
    } else {
        shared.choose(rng).unwrap()
    }
}

fn country_sentence<R: Rng>(rng: &mut R) -> &'static str {
    if rng.gen_bool(0.35) {
        COUNTRY_ONLY.choose(rng).unwrap()
    } else if rng.gen_bool(0.5) {
        COUNTRY_CITY.choose(rng).unwrap()
    } else {
        COUNTRY_PRESIDENT.choose(rng).unwrap()
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Fixture {
    let mut rng = fork_rng(cfg.seed, "synthetic/corpus");
    let mut documents = Vec::with_capacity(cfg.n_docs);
    for d in 0..cfg.n_docs {
        let topic = if rng.gen_bool(cfg.seed_topic_share) {
            rng.gen_range(0..3)
        } else {
            rng.gen_range(3..10)
        };
        let mut w = Writer {
            tokens: Vec::new(),
            mentions: Vec::new(),
        };
        let owned: Vec<usize> = (0..10).filter(|&i| owner(i) == topic).collect();
        if topic < 3 {
            let n = rng.gen_range(4..=6);
            for _ in 0..n {
                let r: f64 = rng.gen();
                if r < 0.25 {
                    w.sentence(country_sentence(&mut rng), COUNTRIES[topic]);
                } else if r < 0.6 {
                    let c = CITIES[*owned.choose(&mut rng).unwrap()];
                    w.sentence(pick(&mut rng, &CITY_ONLY, &COUNTRY_CITY), c);
                } else if r < 0.95 {
                    let p = PRESIDENTS[*owned.choose(&mut rng).unwrap()];
                    w.sentence(pick(&mut rng, &PRESIDENT_ONLY, &COUNTRY_PRESIDENT), p);
                } else {
                    w.filler(&mut rng);
                }
            }
        } else {
            w.sentence(country_sentence(&mut rng), COUNTRIES[topic]);
            if let Some(&i) = owned.first() {
                if rng.gen_bool(0.5) {
                    w.sentence(pick(&mut rng, &CITY_ONLY, &COUNTRY_CITY), CITIES[i]);
                } else {
                    w.sentence(pick(&mut rng, &PRESIDENT_ONLY, &COUNTRY_PRESIDENT), PRESIDENTS[i]);
                }
            }
            for _ in 0..rng.gen_range(1..=3) {
                w.filler(&mut rng);
            }
        }
        documents.push(DocumentRecord {
            doc_id: format!("doc{d:05}"),
            tokens: w.tokens,
            mentions: w.mentions,
        });
    }
    let centroids = centroids(&documents, cfg);
    Fixture {
        documents,
        centroids,
    }
}

/// Class centre plus the mean of per-mention Gaussian noise, in catalog order.
fn centroids(documents: &[DocumentRecord], cfg: &SyntheticConfig) -> Vec<(String, Vec<f64>)> {
    let mut rng = fork_rng(cfg.seed, "synthetic/centroids");
    let dim = cfg.centroid_dim;
    let center = |rng: &mut rand_chacha::ChaCha8Rng| {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm * cfg.centroid_separation).collect::<Vec<f64>>()
    };
    let centers: HashMap<Class, Vec<f64>> = [Class::Country, Class::City, Class::President]
        .into_iter()
        .map(|c| (c, center(&mut rng)))
        .collect();

    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for m in documents.iter().flat_map(|d| &d.mentions) {
        let n = counts.entry(&m.entity).or_insert(0);
        if *n == 0 {
            order.push(&m.entity);
        }
        *n += 1;
    }
    let classes = classes();
    order
        .into_iter()
        .map(|name| {
            let scale = 1.0 / (counts[name] as f64).sqrt();
            let c = &centers[&classes[name]];
            let v = c
                .iter()
                .map(|x| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x + z * scale
                })
                .collect();
            (joined_name(name), v)
        })
        .collect()
}

pub fn query() -> Query {
    Query {
        id: Some("countries".into()),
        class: Class::Country.label().into(),
        seeds: SEED_COUNTRIES.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn truth() -> Vec<TruthRecord> {
    [
        (Class::Country, &COUNTRIES),
        (Class::City, &CITIES),
        (Class::President, &PRESIDENTS),
    ]
    .into_iter()
    .map(|(c, names)| TruthRecord {
        class: c.label().into(),
        entities: names.iter().map(|s| s.to_string()).collect(),
    })
    .collect()
}

fn io(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(p, e)
}

impl Fixture {
    pub fn corpus(&self) -> Result<Corpus> {
        Corpus::from_records(self.documents.iter().cloned())
    }

    /// Centroids indexed by the corpus's entity ids.
    pub fn centroid_provider(&self, corpus: &Corpus) -> Result<CentroidProvider> {
        let by_name: HashMap<&str, &Vec<f64>> =
            self.centroids.iter().map(|(n, v)| (n.as_str(), v)).collect();
        let catalog = corpus.catalog();
        let vectors = catalog
            .ids()
            .map(|e| {
                by_name
                    .get(joined_name(catalog.name(e)).as_str())
                    .map(|v| v.to_vec())
                    .ok_or_else(|| Error::NotFound(format!("no centroid for {}", catalog.name(e))))
            })
            .collect::<Result<Vec<_>>>()?;
        CentroidProvider::from_vectors(vectors)
    }

    /// Centroids in the embedding text format.
    pub fn write_centroids<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.centroids.first().map_or(0, |c| c.1.len());
        writeln!(out, "{} {}", self.centroids.len(), dim)?;
        for (name, v) in &self.centroids {
            write!(out, "{name}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Write `corpus.jsonl`, `centroids.txt`, `queries.jsonl` and `truth.jsonl`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let p = dir.join("corpus.jsonl");
        let mut out = BufWriter::new(fs::File::create(&p).map_err(io(&p))?);
        for d in &self.documents {
            serde_json::to_writer(&mut out, d).map_err(|e| Error::Invariant(e.to_string()))?;
            writeln!(out).map_err(io(&p))?;
        }
        out.flush().map_err(io(&p))?;

        let p = dir.join("centroids.txt");
        let mut out = BufWriter::new(fs::File::create(&p).map_err(io(&p))?);
        self.write_centroids(&mut out).map_err(io(&p))?;
        out.flush().map_err(io(&p))?;

        let p = dir.join("queries.jsonl");
        let line = serde_json::to_string(&query()).map_err(|e| Error::Invariant(e.to_string()))?;
        fs::write(&p, format!("{line}\n")).map_err(io(&p))?;

        let p = dir.join("truth.jsonl");
        let mut text = String::new();
        for t in truth() {
            text.push_str(&serde_json::to_string(&t).map_err(|e| Error::Invariant(e.to_string()))?);
            text.push('\n');
        }
        fs::write(&p, text).map_err(io(&p))
    }
}
