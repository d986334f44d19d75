//! PCA projections of probe-space parse trees, with per-edge deviation from
//! the tree metric, and per-relation edge-length statistics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{EmbeddingCorpus, Parse};
use crate::error::{Error, Result};
use crate::probes::ProbeMatrix;
use crate::tree_geometry::{canonical_pythagorean_embedding, random_branch_embedding};
use crate::vector;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// One `out_dim` coordinate vector per input point.
    pub coords: Vec<Vec<f64>>,
    /// Unit principal axes in input space, one per output dimension.
    pub axes: Vec<Vec<f64>>,
    /// Variance along each axis (divisor `n`).
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

impl Projection {
    /// Fraction of total variance kept by the projection.
    pub fn captured_fraction(&self) -> f64 {
        if self.total_variance == 0.0 {
            return 0.0;
        }
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }
}

/// Projects mean-centred points onto their top `out_dim` principal axes,
/// computed by SVD. Each axis is signed so that its largest-magnitude
/// component is positive. Axes beyond the data's rank yield zero coordinates.
pub fn pca_project(points: &[Vec<f64>], out_dim: usize) -> Result<Projection> {
    if points.len() < out_dim.max(1) {
        return Err(Error::validation(format!(
            "PCA to {out_dim} dimensions needs at least {out_dim} points, got {}",
            points.len()
        )));
    }
    let n = points.len();
    let d = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let mean = vector::mean(points.iter().map(Vec::as_slice)).expect("non-empty");
    let x = DMatrix::from_fn(n, d, |i, j| points[i][j] - mean[j]);
    let total_variance = x.iter().map(|v| v * v).sum::<f64>() / n as f64;

    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let rank = svd.singular_values.len();
    let mut axes = Vec::with_capacity(out_dim);
    let mut explained_variance = Vec::with_capacity(out_dim);
    for a in 0..out_dim {
        if a < rank {
            let mut axis: Vec<f64> = v_t.row(a).iter().copied().collect();
            let lead = axis
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
            if axis[lead] < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            let s = svd.singular_values[a];
            explained_variance.push(s * s / n as f64);
            axes.push(axis);
        } else {
            explained_variance.push(0.0);
            axes.push(vector::zeros(d));
        }
    }
    let coords = (0..n)
        .map(|i| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            axes.iter().map(|a| vector::dot(&row, a)).collect()
        })
        .collect();
    Ok(Projection {
        coords,
        axes,
        explained_variance,
        total_variance,
    })
}

/// Diverging colour scale centred at zero deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorScale {
    pub center: f64,
    /// Deviations are clipped to `center ± clip`.
    pub clip: f64,
}

impl Default for ColorScale {
    fn default() -> Self {
        ColorScale { center: 0.0, clip: 2.0 }
    }
}

impl ColorScale {
    /// Blue for contracted edges, white at the centre, red for stretched ones.
    pub fn rgb(&self, deviation: f64) -> [u8; 3] {
        let t = ((deviation - self.center) / self.clip).clamp(-1.0, 1.0);
        let fade = |t: f64| libm::round(255.0 * (1.0 - t.abs())) as u8;
        if t < 0.0 {
            [fade(t), fade(t), 255]
        } else {
            [255, fade(t), fade(t)]
        }
    }

    pub fn hex(&self, deviation: f64) -> String {
        let [r, g, b] = self.rgb(deviation);
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolidEdge {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
    pub squared_distance: f64,
    /// `squared_distance − 1`, the tree distance of an edge being 1.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DottedEdge {
    pub a: usize,
    pub b: usize,
    pub squared_distance: f64,
    pub tree_distance: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeDrawing {
    pub tokens: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub solid: Vec<SolidEdge>,
    pub dotted: Vec<DottedEdge>,
    pub dotted_threshold: f64,
    pub scale: ColorScale,
}

impl TreeDrawing {
    pub fn mean_abs_deviation(&self) -> f64 {
        if self.solid.is_empty() {
            return 0.0;
        }
        self.solid.iter().map(|e| e.deviation.abs()).sum::<f64>() / self.solid.len() as f64
    }
}

/// Default gap below tree distance that marks a non-edge as suspiciously close.
pub const DEFAULT_DOTTED_THRESHOLD: f64 = 1.0;

/// Draws a parse from points that already live in probe space.
///
/// Solid edges carry `‖p_head − p_dep‖² − 1`. A non-adjacent pair becomes a
/// dotted edge when its squared distance is below `d_tree − dotted_threshold`.
/// Deviations use probe-space distances, not the 2-D layout.
pub fn draw_points(tokens: &[String], parse: &Parse, points: &[Vec<f64>], dotted_threshold: f64) -> Result<TreeDrawing> {
    let n = parse.tree.len();
    if tokens.len() != n || points.len() != n {
        return Err(Error::validation(format!(
            "parse has {n} tokens but got {} token strings and {} embeddings",
            tokens.len(),
            points.len()
        )));
    }
    let dist = parse.tree.distance_matrix();
    let solid = parse
        .dependencies()
        .map(|(head, dep, rel)| {
            let sq = vector::sq_dist(&points[head], &points[dep]);
            SolidEdge {
                head,
                dependent: dep,
                relation: rel.to_string(),
                squared_distance: sq,
                deviation: sq - 1.0,
            }
        })
        .collect();
    let mut dotted = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if parse.tree.is_edge(a, b) {
                continue;
            }
            let sq = vector::sq_dist(&points[a], &points[b]);
            let td = dist.get(a, b);
            if sq < td as f64 - dotted_threshold {
                dotted.push(DottedEdge {
                    a,
                    b,
                    squared_distance: sq,
                    tree_distance: td,
                });
            }
        }
    }
    let coords = if n < 2 {
        alloc::vec![[0.0, 0.0]; n]
    } else {
        pca_project(points, 2)?
            .coords
            .into_iter()
            .map(|c| [c[0], c[1]])
            .collect()
    };
    Ok(TreeDrawing {
        tokens: tokens.to_vec(),
        coords,
        solid,
        dotted,
        dotted_threshold,
        scale: ColorScale::default(),
    })
}

/// Transforms a sentence's embeddings with `probe` and draws its parse.
pub fn build_tree_drawing(
    tokens: &[String],
    parse: &Parse,
    embeddings: &[Vec<f64>],
    probe: &ProbeMatrix,
    dotted_threshold: f64,
) -> Result<TreeDrawing> {
    if embeddings.len() != tokens.len() {
        return Err(Error::validation(format!(
            "{} embeddings for {} tokens",
            embeddings.len(),
            tokens.len()
        )));
    }
    let points = crate::probes::apply_probe(probe, embeddings)?;
    draw_points(tokens, parse, &points, dotted_threshold)
}

/// Probe-transformed embedding beside three idealised embeddings of the same tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonPanel {
    pub probe: TreeDrawing,
    pub canonical: TreeDrawing,
    pub random_branch: TreeDrawing,
    /// i.i.d. `N(0, I/dim)` points, ignoring the tree entirely.
    pub random_cloud: TreeDrawing,
}

pub fn comparison_panel(
    tokens: &[String],
    parse: &Parse,
    embeddings: &[Vec<f64>],
    probe: &ProbeMatrix,
    dim: usize,
    seed: u64,
    dotted_threshold: f64,
) -> Result<ComparisonPanel> {
    let tree = &parse.tree;
    let probe_view = build_tree_drawing(tokens, parse, embeddings, probe, dotted_threshold)?;
    let canonical = canonical_pythagorean_embedding(tree);
    let branch = random_branch_embedding(tree, dim, seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let scale = 1.0 / libm::sqrt(dim as f64);
    let cloud: Vec<Vec<f64>> = (0..tree.len())
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * scale
                })
                .collect()
        })
        .collect();

    Ok(ComparisonPanel {
        probe: probe_view,
        canonical: draw_points(tokens, parse, canonical.points(), dotted_threshold)?,
        random_branch: draw_points(tokens, parse, branch.points(), dotted_threshold)?,
        random_cloud: draw_points(tokens, parse, &cloud, dotted_threshold)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLengthStat {
    pub mean_squared_length: f64,
    pub count: usize,
}

/// Relation label → mean probe-space `‖B·h_head − B·h_dep‖²` over all
/// dependency edges in the corpus at `layer`.
pub fn per_dependency_edge_lengths(
    corpus: &EmbeddingCorpus,
    probe: &ProbeMatrix,
    layer: usize,
) -> Result<BTreeMap<String, EdgeLengthStat>> {
    corpus.check_layer(layer)?;
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in &corpus.sentences {
        let Some(parse) = &s.parse else { continue };
        let pts = crate::probes::apply_probe(probe, &corpus.layer_vectors(s, layer))?;
        for (head, dep, rel) in parse.dependencies() {
            let e = sums.entry(rel.to_string()).or_insert((0.0, 0));
            e.0 += vector::sq_dist(&pts[head], &pts[dep]);
            e.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(rel, (sum, count))| {
            (
                rel,
                EdgeLengthStat {
                    mean_squared_length: sum / count as f64,
                    count,
                },
            )
        })
        .collect())
}
