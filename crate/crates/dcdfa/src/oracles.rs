//! Independent reference implementations backing the `selftest`
//! subcommand and the equivalence test suites.
//!
//! Each function re-derives its result through a deliberately different
//! route than the main code path: these must stay decoupled from the
//! implementations they check.

/// Plain triple loop, k-outermost accumulation order, pure f64.
pub fn matmul_naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for t in 0..k {
        for i in 0..m {
            let av = a[i * k + t];
            for j in 0..n {
                out[i * n + j] += av * b[t * n + j];
            }
        }
    }
    out
}

/// Direct nested-loop convolution over an explicitly padded copy.
pub fn conv2d_naive(
    x: &[f64],
    (bsz, c_in, h, w): (usize, usize, usize, usize),
    k: &[f64],
    (c_out, kh, kw): (usize, usize, usize),
    stride: usize,
    padding: usize,
) -> Vec<f64> {
    let ph = h + 2 * padding;
    let pw = w + 2 * padding;
    let mut padded = vec![0.0; bsz * c_in * ph * pw];
    for b in 0..bsz {
        for c in 0..c_in {
            for y in 0..h {
                for xx in 0..w {
                    padded[((b * c_in + c) * ph + y + padding) * pw + xx + padding] =
                        x[((b * c_in + c) * h + y) * w + xx];
                }
            }
        }
    }
    let oh = (ph - kh) / stride + 1;
    let ow = (pw - kw) / stride + 1;
    let mut out = vec![0.0; bsz * c_out * oh * ow];
    for b in 0..bsz {
        for co in 0..c_out {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0;
                    for ci in 0..c_in {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                acc += padded
                                    [((b * c_in + ci) * ph + oy * stride + ky) * pw
                                        + ox * stride
                                        + kx]
                                    * k[((co * c_in + ci) * kh + ky) * kw + kx];
                            }
                        }
                    }
                    out[((b * c_out + co) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    out
}

/// Declarative DBSCAN reference.
///
/// Core points are found by neighbor counting (self included), clusters
/// are the connected components of the core-core eps-graph computed with
/// union-find, numbered by their smallest core index, and each border
/// point joins the adjacent-core component whose smallest core index is
/// lowest — the same point the scan-order algorithm discovers it from.
pub fn dbscan_reference(dist: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = dist.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist[i][j] <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|ns| ns.len() >= min_pts).collect();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        if !core[i] {
            continue;
        }
        for &j in &neighbors[i] {
            if core[j] {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    // Component key = smallest core index; cluster ids follow key order.
    let mut root_min: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let e = root_min.entry(r).or_insert(i);
            *e = (*e).min(i);
        }
    }
    let mut keys: Vec<usize> = root_min.values().copied().collect();
    keys.sort_unstable();
    let cluster_of_key = |key: usize| keys.binary_search(&key).unwrap();

    let mut labels = vec![None; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            labels[i] = Some(cluster_of_key(root_min[&r]));
        }
    }
    for i in 0..n {
        if core[i] || labels[i].is_some() {
            continue;
        }
        let best = neighbors[i]
            .iter()
            .filter(|&&j| core[j])
            .map(|&j| {
                let r = find(&mut parent, j);
                root_min[&r]
            })
            .min();
        if let Some(key) = best {
            labels[i] = Some(cluster_of_key(key));
        }
    }
    labels
}

/// Retrieval metrics by pair counting instead of sorting.
///
/// The rank of each correct gallery item is one plus the number of valid
/// items scored strictly above it (ties broken by gallery index), and AP
/// follows from ranks directly. Queries with no valid positive are
/// skipped. Returns (mAP, rank-1, rank-5, rank-10, skipped).
pub fn evaluate_reference(
    query_feats: &[Vec<f64>],
    query_ids: &[usize],
    query_cams: &[usize],
    gallery_feats: &[Vec<f64>],
    gallery_ids: &[usize],
    gallery_cams: &[usize],
) -> (f64, f64, f64, f64, usize) {
    let mut aps = Vec::new();
    let mut first_ranks = Vec::new();
    let mut skipped = 0usize;
    for (qi, qf) in query_feats.iter().enumerate() {
        let valid: Vec<usize> = (0..gallery_feats.len())
            .filter(|&g| !(gallery_ids[g] == query_ids[qi] && gallery_cams[g] == query_cams[qi]))
            .collect();
        let sims: Vec<f64> = valid
            .iter()
            .map(|&g| {
                let mut acc = 0.0;
                for c in 0..qf.len() {
                    acc += qf[c] * gallery_feats[g][c];
                }
                acc
            })
            .collect();
        let positives: Vec<usize> = (0..valid.len())
            .filter(|&vi| gallery_ids[valid[vi]] == query_ids[qi])
            .collect();
        if positives.is_empty() {
            skipped += 1;
            continue;
        }
        let mut ranks: Vec<usize> = positives
            .iter()
            .map(|&vi| {
                1 + (0..valid.len())
                    .filter(|&o| {
                        o != vi && (sims[o] > sims[vi] || (sims[o] == sims[vi] && valid[o] < valid[vi]))
                    })
                    .count()
            })
            .collect();
        ranks.sort_unstable();
        let mut ap = 0.0;
        for (i, &r) in ranks.iter().enumerate() {
            ap += (i + 1) as f64 / r as f64;
        }
        ap /= ranks.len() as f64;
        aps.push(ap);
        first_ranks.push(ranks[0]);
    }
    if aps.is_empty() {
        return (0.0, 0.0, 0.0, 0.0, skipped);
    }
    let n = aps.len() as f64;
    let map = aps.iter().sum::<f64>() / n;
    let cmc = |r: usize| first_ranks.iter().filter(|&&fr| fr <= r).count() as f64 / n;
    (map, cmc(1), cmc(5), cmc(10), skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_matmul_identity() {
        let a = vec![1.0, 0.0, 0.0, 1.0];
        let b = vec![3.0, 4.0, 5.0, 6.0];
        assert_eq!(matmul_naive(&a, &b, 2, 2, 2), b);
    }

    #[test]
    fn reference_ap_two_hits() {
        // One query; correct matches land at ranks 1 and 3 of a 5-item
        // gallery -> AP = (1/1 + 2/3) / 2.
        let q = vec![vec![1.0, 0.0]];
        let g = vec![
            vec![1.0, 0.0],
            vec![0.8, 0.6],
            vec![0.6, 0.8],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
        ];
        let (map, r1, _, _, _) = evaluate_reference(
            &q,
            &[5],
            &[0],
            &g,
            &[5, 9, 5, 9, 9],
            &[1, 1, 1, 1, 1],
        );
        assert!((map - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(r1, 1.0);
    }

    #[test]
    fn reference_dbscan_two_blobs() {
        // 4 + 4 points, far apart, plus one isolated outlier.
        let n = 9;
        let coord = |i: usize| -> f64 {
            match i {
                0..=3 => i as f64 * 0.01,
                4..=7 => 10.0 + (i - 4) as f64 * 0.01,
                _ => 100.0,
            }
        };
        let dist: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (coord(i) - coord(j)).abs()).collect())
            .collect();
        let labels = dbscan_reference(&dist, 0.05, 3);
        assert_eq!(labels[0..4], [Some(0); 4]);
        assert_eq!(labels[4..8], [Some(1); 4]);
        assert_eq!(labels[8], None);
    }
}
