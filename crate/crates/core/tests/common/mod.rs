#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stakeweight::ValidatorSnapshot;

pub const SYNTHETIC_CHAINS: [&str; 10] = [
    "aptos", "axelar", "bnb", "celestia", "celo", "cosmos", "injective", "osmosis", "polygon", "sui",
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn synthetic(chain: &str) -> PathBuf {
    fixture(&format!("synthetic/{chain}-synthetic.json"))
}

/// Stakes log-uniform over `[1, 1e12]`.
pub fn log_uniform_stakes(rng: &mut impl Rng, m: usize) -> Vec<u64> {
    let top = 1e12f64.ln();
    (0..m)
        .map(|_| (rng.random::<f64>() * top).exp().floor().max(1.0) as u64)
        .collect()
}

/// `count` snapshots with `m` uniform in `lo..=hi`.
pub fn corpus(seed: u64, count: usize, lo: usize, hi: usize) -> Vec<ValidatorSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let m = rng.random_range(lo..=hi);
            ValidatorSnapshot::from_stakes(format!("rand{i}"), log_uniform_stakes(&mut rng, m)).unwrap()
        })
        .collect()
}

pub fn stakes_u128(s: &ValidatorSnapshot) -> Vec<u128> {
    s.validators()
        .iter()
        .map(|v| u128::try_from(&v.stake).expect("test stakes fit in u128"))
        .collect()
}

/// Smallest subset whose linear weight reaches `num/den` of the total,
/// by enumerating every subset. Integer arithmetic only.
pub fn brute_min_linear(stakes: &[u128], num: u128, den: u128) -> usize {
    let total: u128 = stakes.iter().sum();
    let m = stakes.len();
    (0u32..1 << m)
        .filter(|mask| {
            let sum: u128 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| stakes[i]).sum();
            den * sum >= num * total
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap()
}

/// Same search under square-root weights, reaching the fraction within 1e-9.
pub fn brute_min_sqrt(stakes: &[u128], frac: f64) -> usize {
    let w: Vec<f64> = stakes.iter().map(|&s| (s as f64).sqrt()).collect();
    let total: f64 = w.iter().sum();
    let m = stakes.len();
    (0u32..1 << m)
        .filter(|mask| {
            let sum: f64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| w[i]).sum();
            sum / total >= frac - 1e-9
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap()
}

/// `sum |x_i - x_j| / (2 m^2 mean)` over all ordered pairs.
pub fn pairwise_gini(x: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let mut acc = 0.0;
    for a in x {
        for b in x {
            acc += (a - b).abs();
        }
    }
    acc / (2.0 * m * m * mean)
}

pub fn big(s: &str) -> BigUint {
    s.parse().unwrap()
}

pub mod mock {
    use std::io::{BufRead, BufReader, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::thread;

    pub struct Request {
        pub path: String,
        pub query: Vec<(String, String)>,
        /// Zero-based index of this request on the server.
        pub n: usize,
    }

    impl Request {
        pub fn param(&self, key: &str) -> Option<&str> {
            self.query.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
        }
    }

    /// Serves `handler` on an ephemeral local port until the process exits.
    /// Returns the base URL and a request counter.
    pub fn serve<F>(handler: F) -> (String, Arc<AtomicUsize>)
    where
        F: Fn(&Request) -> (u16, String) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                if reader.read_line(&mut line).is_err() {
                    continue;
                }
                loop {
                    let mut h = String::new();
                    if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
                        break;
                    }
                }
                let target = line.split_whitespace().nth(1).unwrap_or("/").to_string();
                let (path, qs) = target.split_once('?').unwrap_or((&target, ""));
                let query = qs
                    .split('&')
                    .filter(|p| !p.is_empty())
                    .map(|p| {
                        let (k, v) = p.split_once('=').unwrap_or((p, ""));
                        (k.to_string(), v.to_string())
                    })
                    .collect();
                let n = counter.fetch_add(1, Ordering::SeqCst);
                let (code, body) = handler(&Request { path: path.to_string(), query, n });
                let _ = write!(
                    stream,
                    "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            }
        });
        (url, hits)
    }

    pub fn validator_json(address: &str, tokens: &str, status: &str) -> String {
        format!(
            r#"{{"operator_address":"{address}","tokens":"{tokens}","status":"{status}","description":{{"moniker":"node {address}"}}}}"#
        )
    }

    /// A paginated bonded set of `m` validators with stakes `(i + 1) * 10^18`,
    /// honouring `pagination.limit` and offset keys of the form `k<offset>`.
    pub fn staking_set(m: usize) -> impl Fn(&Request) -> (u16, String) + Send + 'static {
        move |req| {
            let limit: usize = req.param("pagination.limit").and_then(|l| l.parse().ok()).unwrap_or(100);
            let offset: usize = req
                .param("pagination.key")
                .and_then(|k| k.strip_prefix('k'))
                .and_then(|k| k.parse().ok())
                .unwrap_or(0);
            let end = (offset + limit).min(m);
            let items: Vec<String> = (offset..end)
                .map(|i| validator_json(&format!("cosmosvaloper{i:03}"), &format!("{}000000000000000000", i + 1), "BOND_STATUS_BONDED"))
                .collect();
            let next = if end < m { format!(r#""k{end}""#) } else { "null".into() };
            (200, format!(r#"{{"validators":[{}],"pagination":{{"next_key":{next},"total":"{m}"}}}}"#, items.join(",")))
        }
    }
}
