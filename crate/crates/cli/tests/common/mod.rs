#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vwsd_core::{EmbeddingSpace, EmbeddingStore, Kind};

pub const DIM: usize = 8;
pub const SPACE: &str = "clip";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-3 {
            normalize(&mut v);
            return v;
        }
    }
}

/// Random unit vector with a zero `axis` coordinate, so exactly orthogonal
/// to the basis vector on that axis.
pub fn orthogonal_filler(rng: &mut ChaCha8Rng, axis: usize, dim: usize) -> Vec<f64> {
    let mut v = random_unit(rng, dim);
    v[axis] = 0.0;
    normalize(&mut v);
    v
}

pub fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

pub fn phrase(n: usize) -> String {
    format!("word{n} sense {n}")
}

pub fn image(n: usize, c: usize) -> String {
    format!("img{n:04}_{c}.jpg")
}

pub fn gold_index(n: usize) -> usize {
    (n * 7 + 3) % 10
}

/// On-disk run fixture: dataset, gold labels, a JSONL store, aux files and a
/// config referencing them.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub n: usize,
}

pub struct Layout {
    pub n: usize,
    pub gold: GoldPlacement,
    pub seed: u64,
}

#[derive(Clone, Copy, PartialEq)]
pub enum GoldPlacement {
    /// Gold equals the query vector (cosine 1).
    Oracle,
    /// Gold is the negated query vector (cosine -1, always last).
    AntiOracle,
    /// All vectors random.
    Random,
}

pub fn dataset_tsv(n: usize) -> String {
    let mut s = String::new();
    for i in 1..=n {
        write!(s, "word{i}\t{}", phrase(i)).unwrap();
        for c in 0..10 {
            write!(s, "\t{}", image(i, c)).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn gold_txt(n: usize) -> String {
    (1..=n).map(|i| format!("{}\n", image(i, gold_index(i)))).collect()
}

/// Store with the phrase text, one context text, and three SD samples per
/// instance, in the `clip` space.
pub fn build_store(layout: &Layout) -> EmbeddingStore {
    let mut rng = rng(layout.seed);
    let mut store = EmbeddingStore::new();
    store.add_space(EmbeddingSpace::new(SPACE, DIM, true).unwrap()).unwrap();
    let put = |store: &mut EmbeddingStore, kind, key: &str, v: &[f64]| {
        store.insert_normalizing(SPACE, kind, key, to_f32(v)).unwrap();
    };
    for i in 1..=layout.n {
        let axis = i % DIM;
        let query: Vec<f64> = match layout.gold {
            GoldPlacement::Random => random_unit(&mut rng, DIM),
            _ => {
                let mut q = vec![0.0; DIM];
                q[axis] = 1.0;
                q
            }
        };
        put(&mut store, Kind::Text, &phrase(i), &query);
        let context = random_unit(&mut rng, DIM);
        put(&mut store, Kind::Text, &format!("context for {i}"), &context);
        for s in 0..3 {
            let v = random_unit(&mut rng, DIM);
            put(&mut store, Kind::Image, &format!("sd{i:04}_{s}.png"), &v);
        }
        for c in 0..10 {
            let v = match (layout.gold, c == gold_index(i)) {
                (GoldPlacement::Oracle, true) => query.clone(),
                (GoldPlacement::AntiOracle, true) => query.iter().map(|x| -x).collect(),
                (GoldPlacement::Random, _) => random_unit(&mut rng, DIM),
                (_, false) => orthogonal_filler(&mut rng, axis, DIM),
            };
            put(&mut store, Kind::Image, &image(i, c), &v);
        }
    }
    store
}

pub fn context_tsv(n: usize) -> String {
    (1..=n).map(|i| format!("{i:06}\tcontext for {i}\n")).collect()
}

pub fn samples_tsv(n: usize) -> String {
    let mut s = String::new();
    for i in 1..=n {
        for k in 0..3 {
            writeln!(s, "{i:06}\tsd{i:04}_{k}.png").unwrap();
        }
    }
    s
}

/// Round trip reproduces the phrase (up to case) for every third instance.
pub fn roundtrip_tsv(n: usize) -> String {
    (1..=n)
        .map(|i| {
            if i % 3 == 0 {
                format!("{i:06}\t{}\n", phrase(i).to_uppercase())
            } else {
                format!("{i:06}\tsomething else {i}\n")
            }
        })
        .collect()
}

pub const CONFIG: &str = r#"
dataset = "data/test.tsv"
gold = "data/test.gold.txt"
stores = ["stores/clip.jsonl"]
out = "out"
formats = ["json", "csv", "markdown"]

[aux.ctx]
path = "aux/ctx.tsv"
kind = "text"

[aux.rt]
path = "aux/rt.tsv"
kind = "text"

[aux.sd]
path = "aux/sd.tsv"
kind = "samples"

[[system]]
name = "base"
space = "clip"
query = "phrase"

[[system]]
name = "ctx"
space = "clip"
query = "context"
tag = "ctx"

[[system]]
name = "sd-cos"
space = "clip"
query = "sd_samples"
tag = "sd"

[[system]]
name = "sd-l2"
space = "clip"
query = "sd_samples"
tag = "sd"
metric = "min_l2"

[[ensemble]]
name = "base+ctx"
members = ["base", "ctx"]

[roundtrip]
tag = "rt"
system = "ctx"
"#;

impl Fixture {
    pub fn new(layout: &Layout) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let n = layout.n;
        let root = dir.path();
        for sub in ["data", "stores", "aux"] {
            fs::create_dir_all(root.join(sub)).unwrap();
        }
        fs::write(root.join("data/test.tsv"), dataset_tsv(n)).unwrap();
        fs::write(root.join("data/test.gold.txt"), gold_txt(n)).unwrap();
        fs::write(root.join("stores/clip.jsonl"), build_store(layout).to_jsonl().unwrap()).unwrap();
        fs::write(root.join("aux/ctx.tsv"), context_tsv(n)).unwrap();
        fs::write(root.join("aux/rt.tsv"), roundtrip_tsv(n)).unwrap();
        fs::write(root.join("aux/sd.tsv"), samples_tsv(n)).unwrap();
        fs::write(root.join("vwsd.toml"), CONFIG).unwrap();
        Fixture { dir, n }
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn config(&self) -> PathBuf {
        self.root().join("vwsd.toml")
    }

    pub fn out(&self) -> PathBuf {
        self.root().join("out")
    }

    pub fn write_config(&self, text: &str) {
        fs::write(self.config(), text).unwrap();
    }

    /// Runs the CLI in-process with `--config` prepended.
    pub fn run(&self, args: &[&str]) -> i32 {
        let config = self.config();
        let mut argv: Vec<String> = vec!["vwsd".into(), "--config".into(), config.display().to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        vwsd_cli::run(argv)
    }
}
