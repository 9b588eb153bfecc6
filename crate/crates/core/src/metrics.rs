//! Pareto dominance, front extraction and front-quality indicators
//! (hypervolume, expected utility, sparsity). All objectives are maximized.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension handled by the exact hypervolume recursion.
pub const MAX_EXACT_HV_DIM: usize = 4;

/// `a` dominates `b`: no worse anywhere and not identical.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "cannot compare vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(weakly_dominates(a, b) && a != b)
}

fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Non-dominated return vectors with the ids of the policies that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<Vec<f64>>,
    pub policy_ids: Vec<u64>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// CSV `policy_id,g_1,...,g_n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["policy_id".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("g_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for (id, p) in self.policy_ids.iter().zip(&self.points) {
            let vals: Vec<String> = p.iter().map(f64::to_string).collect();
            writeln!(out, "{id},{}", vals.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(source: &str, input: R) -> Result<Self> {
        let ingest = |row, message: String| Error::Ingestion {
            source_name: source.to_string(),
            row,
            message,
        };
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr
            .headers()
            .map_err(|e| ingest(0, e.to_string()))?
            .clone();
        if header.get(0) != Some("policy_id") || header.len() < 2 {
            return Err(ingest(0, "header must be policy_id,g_1,...,g_n".into()));
        }
        let mut front = ParetoFront {
            points: Vec::new(),
            policy_ids: Vec::new(),
        };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| ingest(i + 1, e.to_string()))?;
            let id = rec[0]
                .parse()
                .map_err(|_| ingest(i + 1, format!("bad policy id '{}'", &rec[0])))?;
            let point = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| ingest(i + 1, e.to_string()))?;
            front.policy_ids.push(id);
            front.points.push(point);
        }
        Ok(front)
    }
}

/// Maximal elements of `points` under [`dominates`]; exact duplicates keep
/// the first occurrence. Input order is preserved.
pub fn pareto_filter(points: &[Vec<f64>], policy_ids: &[u64]) -> Result<ParetoFront> {
    if points.is_empty() {
        return Err(Error::Validation("pareto_filter needs at least one point".into()));
    }
    if points.len() != policy_ids.len() {
        return Err(Error::Validation(
            "points and policy ids differ in length".into(),
        ));
    }
    let n = points[0].len();
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::Validation("points differ in dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite return vector".into()));
    }
    let mut front = ParetoFront {
        points: Vec::new(),
        policy_ids: Vec::new(),
    };
    for (i, p) in points.iter().enumerate() {
        let dominated = points.iter().any(|q| weakly_dominates(q, p) && q != p);
        let repeated = points[..i].iter().any(|q| q == p);
        if !dominated && !repeated {
            front.points.push(p.clone());
            front.policy_ids.push(policy_ids[i]);
        }
    }
    Ok(front)
}

/// Componentwise minimum over `points`, pushed down by `margin` of its magnitude
/// (absolute `margin` where a coordinate is zero).
pub fn reference_point<'a, I>(points: I, margin: f64) -> Option<Vec<f64>>
where
    I: IntoIterator<Item = &'a Vec<f64>>,
{
    let mut it = points.into_iter();
    let mut lo = it.next()?.clone();
    for p in it {
        for (l, v) in lo.iter_mut().zip(p) {
            *l = l.min(*v);
        }
    }
    Some(
        lo.into_iter()
            .map(|v| if v == 0.0 { -margin } else { v - margin * v.abs() })
            .collect(),
    )
}

fn check_reference(points: &[Vec<f64>], reference: &[f64]) -> Result<()> {
    let offending: Vec<String> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.len() != reference.len() || !weakly_dominates(p, reference))
        .map(|(i, p)| format!("#{i} {p:?}"))
        .collect();
    if !offending.is_empty() {
        return Err(Error::Validation(format!(
            "reference point {reference:?} is not dominated by: {}",
            offending.join(", ")
        )));
    }
    Ok(())
}

/// Lebesgue measure of the union of boxes `[reference, p]`.
///
/// Exact for up to [`MAX_EXACT_HV_DIM`] objectives; beyond that a seeded
/// Monte Carlo estimate with `mc_samples` draws is returned.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    hypervolume_with(points, reference, 1_000_000, 0)
}

pub fn hypervolume_with(
    points: &[Vec<f64>],
    reference: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_reference(points, reference)?;
    if points.is_empty() {
        return Ok(0.0);
    }
    if reference.len() <= MAX_EXACT_HV_DIM {
        let shifted: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().zip(reference).map(|(x, r)| x - r).collect())
            .collect();
        Ok(hv_exact(shifted))
    } else {
        Ok(hv_monte_carlo(points, reference, mc_samples, seed))
    }
}

/// Points are already relative to the origin and non-negative.
fn hv_exact(mut pts: Vec<Vec<f64>>) -> f64 {
    let d = pts[0].len();
    match d {
        1 => pts.iter().map(|p| p[0]).fold(0.0, f64::max),
        2 => {
            pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
            let mut hv = 0.0;
            let mut y_max = 0.0;
            for p in &pts {
                if p[1] > y_max {
                    hv += p[0] * (p[1] - y_max);
                    y_max = p[1];
                }
            }
            hv
        }
        _ => {
            // Slice along the last objective, from the top down.
            pts.sort_by(|a, b| b[d - 1].total_cmp(&a[d - 1]));
            let mut hv = 0.0;
            let mut active: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
            for (i, p) in pts.iter().enumerate() {
                let top = p[d - 1];
                let bottom = pts.get(i + 1).map_or(0.0, |q| q[d - 1]);
                let proj = p[..d - 1].to_vec();
                if !active.iter().any(|a| weakly_dominates(a, &proj)) {
                    active.retain(|a| !weakly_dominates(&proj, a));
                    active.push(proj);
                }
                if top > bottom {
                    hv += hv_exact(active.clone()) * (top - bottom);
                }
            }
            hv
        }
    }
}

fn hv_monte_carlo(points: &[Vec<f64>], reference: &[f64], samples: usize, seed: u64) -> f64 {
    let d = reference.len();
    let upper: Vec<f64> = (0..d)
        .map(|k| points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let volume: f64 = upper.iter().zip(reference).map(|(u, r)| u - r).product();
    if volume <= 0.0 || samples == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..samples {
        for k in 0..d {
            z[k] = reference[k] + rng.random::<f64>() * (upper[k] - reference[k]);
        }
        if points.iter().any(|p| weakly_dominates(p, &z)) {
            hits += 1;
        }
    }
    volume * hits as f64 / samples as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EuConfig {
    /// Grid resolution K for two objectives: ω = (k/K, 1 − k/K), k = 0..=K.
    pub grid: usize,
    /// Dirichlet(1,…,1) draws for three or more objectives.
    pub samples: usize,
    pub seed: u64,
}

impl Default for EuConfig {
    fn default() -> Self {
        Self {
            grid: 100,
            samples: 10_000,
            seed: 0,
        }
    }
}

/// Mean over preferences ω of `max_{G ∈ front} ωᵀG`.
pub fn expected_utility(points: &[Vec<f64>], cfg: &EuConfig) -> Result<f64> {
    let first = points
        .first()
        .ok_or_else(|| Error::Validation("expected utility of an empty front".into()))?;
    let n = first.len();
    let best = |w: &[f64]| {
        points
            .iter()
            .map(|p| p.iter().zip(w).map(|(g, x)| g * x).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    match n {
        0 => Err(Error::Validation("zero-dimensional front".into())),
        1 => Ok(best(&[1.0])),
        2 => {
            let k_max = cfg.grid.max(1);
            let total: f64 = (0..=k_max)
                .map(|k| {
                    let a = k as f64 / k_max as f64;
                    best(&[a, 1.0 - a])
                })
                .sum();
            Ok(total / (k_max + 1) as f64)
        }
        _ => {
            let samples = cfg.samples.max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut w = vec![0.0; n];
            let mut total = 0.0;
            for _ in 0..samples {
                let mut s = 0.0;
                for x in w.iter_mut() {
                    *x = Exp1.sample(&mut rng);
                    s += *x;
                }
                w.iter_mut().for_each(|x| *x /= s);
                total += best(&w);
            }
            Ok(total / samples as f64)
        }
    }
}

/// Mean squared gap between consecutive sorted values, summed over objectives
/// and divided by `|P| − 1`. Zero for fronts with fewer than two points.
pub fn sparsity(points: &[Vec<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points[0].len();
    let mut total = 0.0;
    for k in 0..n {
        let mut col: Vec<f64> = points.iter().map(|p| p[k]).collect();
        col.sort_by(f64::total_cmp);
        total += col.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    }
    total / (points.len() - 1) as f64
}

/// NSGA-II crowding distance; boundary points per objective get +∞.
#[allow(clippy::needless_range_loop)]
pub fn crowding_distance(points: &[Vec<f64>]) -> Vec<f64> {
    let len = points.len();
    let mut dist = vec![0.0; len];
    if len == 0 {
        return dist;
    }
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    for k in 0..points[0].len() {
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by(|&a, &b| points[a][k].total_cmp(&points[b][k]).then(a.cmp(&b)));
        let lo = points[order[0]][k];
        let hi = points[order[len - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[len - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in 1..len - 1 {
            let gap = points[order[w + 1]][k] - points[order[w - 1]][k];
            dist[order[w]] += gap / span;
        }
    }
    dist
}

/// The three indicators for one front, with the settings used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hv: f64,
    pub eu: f64,
    pub sp: f64,
    pub front_size: usize,
    pub reference_point: Vec<f64>,
    pub eu_grid: usize,
    pub eu_samples: usize,
    pub seed: u64,
}

pub fn evaluate_front(front: &ParetoFront, reference: &[f64], eu: &EuConfig) -> Result<MetricsReport> {
    Ok(MetricsReport {
        hv: hypervolume_with(&front.points, reference, 1_000_000, eu.seed)?,
        eu: expected_utility(&front.points, eu)?,
        sp: sparsity(&front.points),
        front_size: front.len(),
        reference_point: reference.to_vec(),
        eu_grid: eu.grid,
        eu_samples: eu.samples,
        seed: eu.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[f64]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn dominance_cases() {
        assert!(dominates(&[2.0, 3.0], &[1.0, 3.0]).unwrap());
        assert!(!dominates(&[2.0, 1.0], &[1.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn filter_cases() {
        let p = pts(&[&[1.0, 2.0], &[2.0, 1.0], &[0.0, 0.0]]);
        let f = pareto_filter(&p, &[10, 11, 12]).unwrap();
        assert_eq!(f.points, pts(&[&[1.0, 2.0], &[2.0, 1.0]]));
        assert_eq!(f.policy_ids, vec![10, 11]);

        let single = pareto_filter(&pts(&[&[3.0, 4.0]]), &[1]).unwrap();
        assert_eq!(single.points, pts(&[&[3.0, 4.0]]));

        let dup = pareto_filter(&pts(&[&[0.0, 0.0], &[0.0, 0.0]]), &[4, 5]).unwrap();
        assert_eq!(dup.policy_ids, vec![4]);

        assert!(pareto_filter(&[], &[]).is_err());
    }

    #[test]
    fn hv_hand_cases() {
        assert_eq!(hypervolume(&pts(&[&[3.0, 2.0]]), &[0.0, 0.0]).unwrap(), 6.0);
        assert_eq!(
            hypervolume(&pts(&[&[2.0, 1.0], &[1.0, 2.0]]), &[0.0, 0.0]).unwrap(),
            3.0
        );
        // 3-D: two unit-overlapping boxes, 2·1·1 + 1·2·1 + 1·1·2 − overlaps
        let three = pts(&[&[2.0, 1.0, 1.0], &[1.0, 2.0, 1.0], &[1.0, 1.0, 2.0]]);
        assert_eq!(hypervolume(&three, &[0.0, 0.0, 0.0]).unwrap(), 4.0);
        let four = pts(&[&[1.0, 1.0, 1.0, 2.0], &[1.0, 1.0, 2.0, 1.0]]);
        assert_eq!(hypervolume(&four, &[0.0; 4]).unwrap(), 3.0);
        assert_eq!(hypervolume(&pts(&[&[4.0], &[1.0]]), &[-1.0]).unwrap(), 5.0);
    }

    #[test]
    fn hv_rejects_bad_reference() {
        let err = hypervolume(&pts(&[&[1.0, 1.0], &[3.0, -1.0]]), &[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("#1"));
    }

    #[test]
    fn hv_high_dim_uses_monte_carlo() {
        let p = pts(&[&[1.0; 5]]);
        let hv = hypervolume_with(&p, &[0.0; 5], 1000, 3).unwrap();
        assert_eq!(hv, 1.0);
    }

    #[test]
    fn eu_cases() {
        let cfg = EuConfig::default();
        let single = expected_utility(&pts(&[&[4.0, 6.0]]), &cfg).unwrap();
        assert!((single - 5.0).abs() < 1e-12);
        let corners = expected_utility(&pts(&[&[1.0, 0.0], &[0.0, 1.0]]), &cfg).unwrap();
        assert!((corners - 0.75).abs() <= 1.0 / 100.0);
        let with_dominated =
            expected_utility(&pts(&[&[1.0, 0.0], &[0.0, 1.0], &[0.1, 0.1]]), &cfg).unwrap();
        assert_eq!(corners, with_dominated);
        assert!(expected_utility(&[], &cfg).is_err());
    }

    #[test]
    fn eu_three_objectives_mean_of_symmetric_point() {
        let eu = expected_utility(&pts(&[&[3.0, 3.0, 3.0]]), &EuConfig::default()).unwrap();
        assert!((eu - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sparsity_cases() {
        assert_eq!(sparsity(&pts(&[&[0.0, 1.0], &[1.0, 0.0]])), 2.0);
        assert_eq!(sparsity(&pts(&[&[0.0, 2.0], &[1.0, 1.0], &[2.0, 0.0]])), 2.0);
        let collapsed = pareto_filter(&pts(&[&[0.0, 0.0], &[0.0, 0.0]]), &[0, 1]).unwrap();
        assert_eq!(sparsity(&collapsed.points), 0.0);
    }

    #[test]
    fn crowding_extremes_infinite() {
        let p: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 4.0 - i as f64]).collect();
        let d = crowding_distance(&p);
        assert!(d[0].is_infinite() && d[4].is_infinite());
        assert_eq!(d[1], d[2]);
        assert_eq!(d[2], d[3]);
        assert!((d[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_point_margin() {
        let p = pts(&[&[10.0, -2.0], &[5.0, 0.0]]);
        assert_eq!(reference_point(&p, 0.01).unwrap(), vec![4.95, -2.02]);
        let z = pts(&[&[0.0, 1.0]]);
        assert_eq!(reference_point(&z, 0.01).unwrap(), vec![-0.01, 0.99]);
    }

    #[test]
    fn front_csv_round_trip() {
        let f = pareto_filter(&pts(&[&[1.5, 0.1], &[0.25, 2.0]]), &[7, 9]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("policy_id,g_1,g_2\n7,1.5,0.1"));
        assert_eq!(ParetoFront::read_csv("mem", buf.as_slice()).unwrap(), f);
    }
}
