//! LibSVM-format datasets, synthetic generation, and client partitioning.

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::problem::{power_iteration, LogisticObjective};
use crate::rng::Rng;

/// One sparse row: strictly increasing 1-based indices with their values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn to_dense(&self, dim: usize) -> DenseVector {
        let mut v = DenseVector::zeros(dim);
        for (&idx, &val) in self.indices.iter().zip(&self.values) {
            v.entries_mut()[idx as usize - 1] = val;
        }
        v
    }
}

/// Parsed dataset: labels normalized to ±1, feature dimension `dim` covering
/// every index that occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<SparseRow>,
    pub labels: Vec<f64>,
    pub dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Shard assignment: a seeded shuffle followed by a contiguous split into
/// `num_shards` shards of `shard_size` rows; the remainder is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub num_shards: usize,
    pub shard_size: usize,
    /// Row indices in shard-major order (`num_shards * shard_size` entries).
    pub order: Vec<usize>,
    pub dropped: usize,
}

impl Partition {
    /// Trivial single-shard partition keeping every row in order.
    pub fn flat(n: usize) -> Self {
        Partition {
            num_shards: 1,
            shard_size: n,
            order: (0..n).collect(),
            dropped: 0,
        }
    }
}

/// Parses LibSVM text: `label idx:val idx:val ...` per line, indices strictly
/// increasing and 1-based, labels in `{-1, 0, +1}` (`0` maps to `-1`).
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// Serializes in canonical LibSVM form: `+1`/`-1` labels and shortest
/// round-trip values. `parse ∘ serialize` is the identity on datasets whose
/// dimension is witnessed by some row (use the cache format otherwise).
pub fn serialize_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for (row, &label) in ds.rows.iter().zip(&ds.labels) {
        out.push_str(if label > 0.0 { "+1" } else { "-1" });
        for (&idx, &val) in row.indices.iter().zip(&row.values) {
            out.push_str(&format!(" {idx}:{val}"));
        }
        out.push('\n');
    }
    out
}

/// Cache format: a `n dim` header line followed by LibSVM lines. The header
/// pins the dimension, so trailing all-zero features survive round trips.
pub fn write_cache(ds: &Dataset) -> String {
    format!("{} {}\n{}", ds.len(), ds.dim, serialize_libsvm(ds))
}

/// Accepts either format: a leading `n dim` header line (two bare integers)
/// selects the cache parser, anything else the plain LibSVM parser.
pub fn parse_any(text: &str) -> Result<Dataset> {
    let first = text.lines().next().unwrap_or("");
    let toks: Vec<&str> = first.split_ascii_whitespace().collect();
    let header = toks.len() == 2 && toks.iter().all(|t| t.parse::<usize>().is_ok());
    if header {
        parse_cache(text)
    } else {
        parse_libsvm(text)
    }
}

pub fn parse_cache(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (line_no, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let mut parts = header.split_ascii_whitespace();
    let n: usize = parse_token(parts.next(), line_no, "row count")?;
    let dim: usize = parse_token(parts.next(), line_no, "dimension")?;
    if parts.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            message: "header must be exactly `n dim`".into(),
        });
    }
    let mut ds = parse_lines(lines)?;
    if ds.len() != n {
        return Err(Error::Parse {
            line: line_no,
            message: format!("header promises {n} rows, found {}", ds.len()),
        });
    }
    if dim < ds.dim {
        return Err(Error::Parse {
            line: line_no,
            message: format!("header dimension {dim} below max feature index {}", ds.dim),
        });
    }
    ds.dim = dim;
    Ok(ds)
}

fn parse_token<T: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T> {
    tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?
    .parse()
    .map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric {what}"),
    })
}

fn parse_lines<'a, I>(lines: I) -> Result<Dataset>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    let mut saw_line = false;
    for (line_no, line) in lines {
        saw_line = true;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let raw_label: f64 = parse_token(tokens.next(), line_no, "label")?;
        let label = match raw_label {
            l if l == 1.0 => 1.0,
            l if l == -1.0 => -1.0,
            l if l == 0.0 => -1.0,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("label {other} not in {{-1, 0, +1}}"),
                })
            }
        };
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut prev_idx = 0u32;
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("feature `{tok}` is not idx:val"),
            })?;
            let idx: u32 = idx_str.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric feature index `{idx_str}`"),
            })?;
            let val: f64 = val_str.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric feature value `{val_str}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "feature indices are 1-based".into(),
                });
            }
            if idx <= prev_idx {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("feature index {idx} not strictly increasing"),
                });
            }
            prev_idx = idx;
            indices.push(idx);
            values.push(val);
        }
        dim = dim.max(prev_idx as usize);
        rows.push(SparseRow { indices, values });
        labels.push(label);
    }
    if !saw_line || rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(Dataset { rows, labels, dim })
}

/// Seeded shuffle, contiguous split into `num_shards` shards of
/// `floor(n / num_shards)` rows each; the remainder rows are dropped and
/// reported.
pub fn partition(ds: &Dataset, num_shards: usize, rng: &mut Rng) -> Result<Partition> {
    let n = ds.len();
    if num_shards == 0 || num_shards > n {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} rows into {num_shards} shards"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Fisher-Yates with the shared deterministic stream.
    for i in (1..n).rev() {
        let j = rng.below((i + 1) as u64) as usize;
        order.swap(i, j);
    }
    let shard_size = n / num_shards;
    let kept = shard_size * num_shards;
    order.truncate(kept);
    Ok(Partition {
        num_shards,
        shard_size,
        order,
        dropped: n - kept,
    })
}

/// Materializes the regularized logistic instance for a partition.
pub fn to_logistic(ds: &Dataset, part: &Partition, lambda: f64) -> Result<LogisticObjective> {
    let rows: Vec<DenseVector> = part.order.iter().map(|&r| ds.rows[r].to_dense(ds.dim)).collect();
    let labels: Vec<f64> = part.order.iter().map(|&r| ds.labels[r]).collect();
    LogisticObjective::new(rows, labels, part.num_shards, lambda)
}

/// How the ridge weight is chosen for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// `λ = L_0 / (κ - 1)` so the flat condition number is `κ`.
    KappaTarget(f64),
    /// `λ = c L` (i.e. `λ = c L_0 / (1 - c)` before regularization).
    FractionOfL(f64),
}

/// Synthetic dataset: standard Gaussian rows, labels from a random hyperplane
/// with 10% flips, and the ridge weight chosen by `rule`. Returns the dataset
/// plus the chosen `λ`.
pub fn generate_synthetic(
    rng: &mut Rng,
    n: usize,
    dim: usize,
    rule: LambdaRule,
) -> Result<(Dataset, f64)> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidInput("need n >= 1 and dim >= 1".into()));
    }
    let hyperplane: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut dense_rows = Vec::with_capacity(n);
    for _ in 0..n {
        let feats: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let margin: f64 = feats.iter().zip(&hyperplane).map(|(a, w)| a * w).sum();
        let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.bernoulli(0.1)? {
            label = -label;
        }
        rows.push(SparseRow {
            indices: (1..=dim as u32).collect(),
            values: feats.clone(),
        });
        dense_rows.push(feats);
        labels.push(label);
    }
    // Unregularized smoothness of the flat average loss.
    let l0 = power_iteration(
        dim,
        |v| {
            let mut acc = vec![0.0; dim];
            for a in &dense_rows {
                let av: f64 = a.iter().zip(v).map(|(x, y)| x * y).sum();
                let c = av / (4.0 * n as f64);
                for (dst, x) in acc.iter_mut().zip(a) {
                    *dst += c * x;
                }
            }
            acc
        },
        1e-8,
        10_000,
    );
    let lambda = match rule {
        LambdaRule::KappaTarget(kappa) => {
            if !(kappa > 1.0) {
                return Err(Error::InvalidInput(format!(
                    "condition-number target {kappa} must exceed 1"
                )));
            }
            // Degenerate data (l0 = 0) is already perfectly conditioned; fall
            // back to a unit ridge.
            if l0 > 0.0 {
                l0 / (kappa - 1.0)
            } else {
                1.0
            }
        }
        LambdaRule::FractionOfL(c) => {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "fraction {c} must lie in (0, 1)"
                )));
            }
            if l0 > 0.0 {
                c * l0 / (1.0 - c)
            } else {
                1.0
            }
        }
    };
    Ok((Dataset { rows, labels, dim }, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{estimate_constants, CompositeProblem, Regularizer};
    use proptest::{prop_assert_eq, proptest};

    #[test]
    fn parses_the_format_definition_example() {
        let ds = parse_libsvm("+1 1:0.5 3:-2\n").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels[0], 1.0);
        assert_eq!(ds.dim, 3);
        assert_eq!(ds.rows[0].indices, vec![1, 3]);
        assert_eq!(ds.rows[0].values, vec![0.5, -2.0]);
    }

    #[test]
    fn zero_labels_normalize_to_minus_one() {
        let ds = parse_libsvm("0 2:1\n").unwrap();
        assert_eq!(ds.labels[0], -1.0);
        assert_eq!(ds.dim, 2);
    }

    #[test]
    fn malformed_lines_carry_their_line_numbers() {
        let cases = [
            ("+1 1:0.5\n+1 2:abc\n", 2, "non-numeric"),
            ("+1 3:1 2:1\n", 1, "strictly increasing"),
            ("+1 1:1\n-1 0:2\n", 2, "1-based"),
            ("", 1, "no data rows"),
            ("+1 1:0.5\n+2 1:1\n", 2, "label"),
            ("+1 1;0.5\n", 1, "idx:val"),
        ];
        for (text, line, needle) in cases {
            match parse_libsvm(text) {
                Err(Error::Parse { line: l, message }) => {
                    assert_eq!(l, line, "wrong line for {text:?}");
                    assert!(
                        message.contains(needle),
                        "message {message:?} lacks {needle:?}"
                    );
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip_is_identity_on_a_fixture() {
        let text = "+1 1:0.5 3:-2\n-1 2:1.25\n+1 1:1e-3 2:7 4:-0.125\n-1 4:3\n+1 2:0.1\n";
        let ds = parse_libsvm(text).unwrap();
        let again = parse_libsvm(&serialize_libsvm(&ds)).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn cache_round_trip_preserves_explicit_dimension() {
        let ds = Dataset {
            rows: vec![SparseRow {
                indices: vec![1],
                values: vec![2.0],
            }],
            labels: vec![1.0],
            dim: 10, // trailing zero features
        };
        let again = parse_cache(&write_cache(&ds)).unwrap();
        assert_eq!(ds, again);
        assert!(parse_cache("2 5\n+1 1:1\n").is_err(), "row count mismatch");
        assert!(parse_cache("1 2\n+1 5:1\n").is_err(), "dim below max index");
    }

    #[test]
    fn partition_splits_evenly_and_reports_remainder() {
        let (ds, _) = generate_synthetic(&mut Rng::new(1), 10, 3, LambdaRule::KappaTarget(10.0))
            .unwrap();
        let p = partition(&ds, 2, &mut Rng::new(2)).unwrap();
        assert_eq!((p.num_shards, p.shard_size, p.dropped), (2, 5, 0));
        let mut seen = p.order.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());

        let p3 = partition(&ds, 3, &mut Rng::new(2)).unwrap();
        assert_eq!((p3.shard_size, p3.dropped), (3, 1));
        let mut kept = p3.order.clone();
        kept.sort_unstable();
        kept.dedup();
        assert_eq!(kept.len(), 9, "kept rows are distinct");
        assert!(partition(&ds, 11, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn different_seeds_shuffle_differently_with_equal_shapes() {
        let (ds, _) = generate_synthetic(&mut Rng::new(3), 1000, 4, LambdaRule::KappaTarget(50.0))
            .unwrap();
        let a = partition(&ds, 10, &mut Rng::new(100)).unwrap();
        let b = partition(&ds, 10, &mut Rng::new(200)).unwrap();
        assert_eq!(a.shard_size, b.shard_size);
        assert_ne!(a.order, b.order);
        // Same seed reproduces the assignment bitwise.
        let c = partition(&ds, 10, &mut Rng::new(100)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn synthetic_kappa_target_is_hit_within_factor_two() {
        for kappa in [1e2, 1e3] {
            let (ds, lambda) =
                generate_synthetic(&mut Rng::new(7), 200, 10, LambdaRule::KappaTarget(kappa))
                    .unwrap();
            let obj = to_logistic(&ds, &Partition::flat(ds.len()), lambda).unwrap();
            let p = CompositeProblem::new(Box::new(obj), Regularizer::Zero);
            let c = estimate_constants(&p);
            let measured = c.condition_number();
            assert!(
                measured >= kappa / 2.0 && measured <= 2.0 * kappa,
                "target {kappa}, measured {measured}"
            );
        }
    }

    #[test]
    fn fraction_rule_sets_lambda_to_that_fraction_of_l() {
        let (ds, lambda) =
            generate_synthetic(&mut Rng::new(9), 100, 8, LambdaRule::FractionOfL(5e-4)).unwrap();
        let obj = to_logistic(&ds, &Partition::flat(ds.len()), lambda).unwrap();
        let p = CompositeProblem::new(Box::new(obj), Regularizer::Zero);
        let c = estimate_constants(&p);
        assert!(
            (lambda - 5e-4 * c.l).abs() <= 1e-6 * lambda.max(1e-12),
            "λ = {lambda}, 5e-4 L = {}",
            5e-4 * c.l
        );
    }

    #[test]
    fn single_row_instance_still_builds_and_solves() {
        let (ds, lambda) =
            generate_synthetic(&mut Rng::new(11), 1, 3, LambdaRule::KappaTarget(10.0)).unwrap();
        let obj = to_logistic(&ds, &Partition::flat(1), lambda).unwrap();
        let mut p = CompositeProblem::new(Box::new(obj), Regularizer::Zero);
        p.ensure_reference(1e-10).unwrap();
        assert!(p.require_reference().is_ok());
    }

    #[test]
    fn fixed_seed_generates_identical_datasets() {
        let a = generate_synthetic(&mut Rng::new(5), 50, 6, LambdaRule::KappaTarget(100.0)).unwrap();
        let b = generate_synthetic(&mut Rng::new(5), 50, 6, LambdaRule::KappaTarget(100.0)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    proptest! {
        #[test]
        fn random_datasets_round_trip(seed in 0u64..10_000) {
            let mut rng = Rng::new(seed);
            let n = 1 + (rng.below(20) as usize);
            let dim = 1 + (rng.below(8) as usize);
            let (ds, _) = generate_synthetic(&mut rng, n, dim, LambdaRule::KappaTarget(10.0)).unwrap();
            let again = parse_cache(&write_cache(&ds)).unwrap();
            prop_assert_eq!(ds, again);
        }
    }
}
