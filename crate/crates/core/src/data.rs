//! Datasets, the margin matrix `A`, class-mean vectors and the within-class
//! scatter operator `Q`.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weak::WeakClassifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    #[inline]
    pub fn as_scalar<T: Scalar>(self) -> T {
        match self {
            Label::Positive => T::one(),
            Label::Negative => -T::one(),
        }
    }

    pub fn from_sign(v: i64) -> Option<Self> {
        match v {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }
}

/// Labelled feature rows, stored row-major and sorted positives-first.
#[derive(Debug)]
pub struct Dataset<T> {
    n_features: usize,
    features: Vec<T>,
    labels: Vec<Label>,
    m1: usize,
    /// `permutation[i]` is the input row index of sorted row `i`.
    permutation: Vec<usize>,
    sorted: OnceLock<Vec<Vec<u32>>>,
}

impl<T: Clone> Clone for Dataset<T> {
    fn clone(&self) -> Self {
        Self {
            n_features: self.n_features,
            features: self.features.clone(),
            labels: self.labels.clone(),
            m1: self.m1,
            permutation: self.permutation.clone(),
            sorted: OnceLock::new(),
        }
    }
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from arbitrary-order rows; rows are stably reordered
    /// positives-first and the permutation is kept.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: labels.len() });
        }
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| labels[i] == Label::Negative);
        Self::assemble(&rows, &labels, order)
    }

    /// Builds a dataset whose rows must already be label-sorted.
    pub fn from_sorted_rows(rows: Vec<Vec<T>>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: labels.len() });
        }
        if labels.windows(2).any(|p| p[0] == Label::Negative && p[1] == Label::Positive) {
            return Err(Error::InvalidDataset("rows are not sorted positives-first".into()));
        }
        let order = (0..rows.len()).collect();
        Self::assemble(&rows, &labels, order)
    }

    /// Positives followed by negatives.
    pub fn from_classes(positives: &[Vec<T>], negatives: &[Vec<T>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(positives.len() + negatives.len());
        rows.extend_from_slice(positives);
        rows.extend_from_slice(negatives);
        let mut labels = vec![Label::Positive; positives.len()];
        labels.extend(std::iter::repeat_n(Label::Negative, negatives.len()));
        Self::from_sorted_rows(rows, labels)
    }

    fn assemble(rows: &[Vec<T>], labels: &[Label], order: Vec<usize>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidDataset("dataset is empty".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidDataset("rows have no features".into()));
        }
        let mut features = Vec::with_capacity(m * d);
        let mut sorted_labels = Vec::with_capacity(m);
        for &i in &order {
            if rows[i].len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: rows[i].len() });
            }
            if rows[i].iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {i} has a non-finite feature")));
            }
            features.extend_from_slice(&rows[i]);
            sorted_labels.push(labels[i]);
        }
        let m1 = sorted_labels.iter().filter(|&&l| l == Label::Positive).count();
        if m1 == 0 || m1 == m {
            return Err(Error::InvalidDataset(format!(
                "both classes are required (positives: {m1}, negatives: {})",
                m - m1
            )));
        }
        Ok(Self {
            n_features: d,
            features,
            labels: sorted_labels,
            m1,
            permutation: order,
            sorted: OnceLock::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m() - self.m1
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn positives(&self) -> impl Iterator<Item = &[T]> {
        self.rows().take(self.m1)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &[T]> {
        self.rows().skip(self.m1)
    }

    #[inline]
    pub fn value(&self, i: usize, feature: usize) -> T {
        self.features[i * self.n_features + feature]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Row indices ordered by ascending value of `feature` (cached).
    pub fn sorted_order(&self, feature: usize) -> &[u32] {
        let all = self.sorted.get_or_init(|| {
            (0..self.n_features)
                .map(|f| {
                    let mut idx: Vec<u32> = (0..self.m() as u32).collect();
                    idx.sort_by(|&a, &b| {
                        self.value(a as usize, f)
                            .partial_cmp(&self.value(b as usize, f))
                            .expect("finite features")
                    });
                    idx
                })
                .collect()
        });
        &all[feature]
    }

    pub fn class_means(&self) -> ClassMeanVectors<T> {
        ClassMeanVectors::new(self.m1, self.m2())
    }

    /// Reads `label,f0,f1,...` CSV. Lines starting with `#` are ignored.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("label") {
            return Err(Error::InvalidDataset("first CSV column must be `label`".into()));
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let raw = rec.get(0).unwrap_or("");
            let lab = raw
                .trim_start_matches('+')
                .parse::<i64>()
                .ok()
                .and_then(Label::from_sign)
                .ok_or_else(|| Error::InvalidDataset(format!("record {line}: bad label `{raw}`")))?;
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>().map(T::lit).map_err(|_| {
                        Error::InvalidDataset(format!("record {line}: bad number `{s}`"))
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
            labels.push(lab);
        }
        Self::from_rows(rows, labels)
    }

    /// Writes the dataset in sorted order. `comment` lines are emitted first
    /// with a `# ` prefix.
    pub fn save_csv(&self, path: impl AsRef<Path>, comment: Option<&str>) -> Result<()> {
        std::fs::write(path, self.to_csv_string(comment))?;
        Ok(())
    }

    pub fn to_csv_string(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            for line in c.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push_str("label");
        for f in 0..self.n_features {
            out.push_str(&format!(",f{f}"));
        }
        out.push('\n');
        for i in 0..self.m() {
            out.push_str(if self.labels[i] == Label::Positive { "+1" } else { "-1" });
            for &v in self.row(i) {
                out.push(',');
                out.push_str(&crate::io::fmt_scalar(v));
            }
            out.push('\n');
        }
        out
    }
}

/// `A_ij = y_i h_j(x_i)`, stored column-major as exact `±1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginMatrix {
    m: usize,
    columns: Vec<Vec<i8>>,
}

impl MarginMatrix {
    pub fn empty(m: usize) -> Self {
        Self { m, columns: Vec::new() }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[i8] {
        &self.columns[j]
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        self.columns[j][i]
    }

    /// Column `y ⊙ h(X)` for one weak classifier.
    pub fn column_for<T: Scalar, H: WeakClassifier<T> + ?Sized>(data: &Dataset<T>, h: &H) -> Vec<i8> {
        (0..data.m()).map(|i| data.label(i).sign() * h.classify(data.row(i))).collect()
    }

    pub fn push<T: Scalar, H: WeakClassifier<T> + ?Sized>(&mut self, data: &Dataset<T>, h: &H) -> Result<()> {
        if data.m() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: data.m() });
        }
        self.columns.push(Self::column_for(data, h));
        Ok(())
    }

    pub fn push_column(&mut self, col: Vec<i8>) -> Result<()> {
        if col.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: col.len() });
        }
        if col.iter().any(|&a| a != 1 && a != -1) {
            return Err(Error::InvalidArgument("margin entries must be +1 or -1".into()));
        }
        self.columns.push(col);
        Ok(())
    }

    /// `ρ = A w`.
    pub fn margins<T: Scalar>(&self, w: &[T]) -> Result<Vec<T>> {
        if w.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: w.len() });
        }
        let mut rho = vec![T::zero(); self.m];
        for (col, &wj) in self.columns.iter().zip(w) {
            for (r, &a) in rho.iter_mut().zip(col) {
                if a > 0 {
                    *r = *r + wj;
                } else {
                    *r = *r - wj;
                }
            }
        }
        Ok(rho)
    }

    /// Edge of column `j` under weights `u`: `Σ_i u_i A_ij`.
    pub fn edge<T: Scalar>(&self, j: usize, u: &[T]) -> T {
        column_edge(&self.columns[j], u)
    }

    /// `Aᵀu`.
    pub fn edges<T: Scalar>(&self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: u.len() });
        }
        Ok((0..self.n()).map(|j| self.edge(j, u)).collect())
    }
}

pub(crate) fn column_edge<T: Scalar>(col: &[i8], u: &[T]) -> T {
    col.iter()
        .zip(u)
        .fold(T::zero(), |acc, (&a, &ui)| if a > 0 { acc + ui } else { acc - ui })
}

/// Builds `A` for an ordered list of weak classifiers.
pub fn build_margin_matrix<T: Scalar, H: WeakClassifier<T>>(
    data: &Dataset<T>,
    weak: &[H],
) -> Result<MarginMatrix> {
    if weak.is_empty() {
        return Err(Error::NoWeakClassifiers);
    }
    let mut a = MarginMatrix::empty(data.m());
    for h in weak {
        a.push(data, h)?;
    }
    Ok(a)
}

/// `e1` (1/m1 on positives), `e2` (1/m2 on negatives) and `e = e1 + e2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeanVectors<T> {
    pub m1: usize,
    pub m2: usize,
    pub e1: Vec<T>,
    pub e2: Vec<T>,
    pub e: Vec<T>,
}

impl<T: Scalar> ClassMeanVectors<T> {
    pub fn new(m1: usize, m2: usize) -> Self {
        let m = m1 + m2;
        let p = T::one() / T::from_count(m1);
        let q = T::one() / T::from_count(m2);
        let e1: Vec<T> = (0..m).map(|i| if i < m1 { p } else { T::zero() }).collect();
        let e2: Vec<T> = (0..m).map(|i| if i < m1 { T::zero() } else { q }).collect();
        let e = (0..m).map(|i| e1[i] + e2[i]).collect();
        Self { m1, m2, e1, e2, e }
    }

    /// `eᵀ a` for a `±1` column; equals the class-mean gap of that weak learner.
    pub fn dot_column(&self, col: &[i8]) -> T {
        let s1: i64 = col[..self.m1].iter().map(|&a| a as i64).sum();
        let s2: i64 = col[self.m1..].iter().map(|&a| a as i64).sum();
        T::from_i64(s1).unwrap() / T::from_count(self.m1)
            + T::from_i64(s2).unwrap() / T::from_count(self.m2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QMode {
    /// Fisher LDA: both class blocks present.
    Lda,
    /// Linear asymmetric classifier: negative block is zero.
    Lac,
}

pub const DEFAULT_DELTA: f64 = 1e-8;

/// Block-diagonal within-class scatter operator over margins.
///
/// The exact form has blocks `Q_k = (1/m)[(m_k/(m_k-1)) I - J/(m_k-1)]`; the
/// approximate form replaces every active block by `(1/m) I`. Nothing here is
/// stored densely; all products run in `O(m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QMatrix<T> {
    pub mode: QMode,
    pub exact: bool,
    pub m1: usize,
    pub m2: usize,
    pub delta: T,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    len: usize,
    active: bool,
}

impl<T: Scalar> QMatrix<T> {
    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    fn blocks(&self) -> [Block; 2] {
        [
            Block { start: 0, len: self.m1, active: true },
            Block { start: self.m1, len: self.m2, active: self.mode == QMode::Lda },
        ]
    }

    fn inv_m(&self) -> T {
        T::one() / T::from_count(self.m())
    }

    /// Diagonal entry of an exact active block.
    pub fn block_diag(&self) -> T {
        self.inv_m()
    }

    /// Off-diagonal entry of an exact block of size `len`.
    pub fn block_offdiag(&self, len: usize) -> T {
        if !self.exact {
            return T::zero();
        }
        -self.inv_m() / T::from_count(len - 1)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: len });
        }
        Ok(())
    }

    /// `Q x`.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x.len())?;
        let mut out = vec![T::zero(); x.len()];
        let inv_m = self.inv_m();
        for b in self.blocks() {
            if !b.active {
                continue;
            }
            let xs = &x[b.start..b.start + b.len];
            let os = &mut out[b.start..b.start + b.len];
            if self.exact {
                let k1 = T::from_count(b.len - 1);
                let s: T = xs.iter().copied().sum();
                let scale = T::from_count(b.len) / k1;
                for (o, &v) in os.iter_mut().zip(xs) {
                    *o = inv_m * (scale * v - s / k1);
                }
            } else {
                for (o, &v) in os.iter_mut().zip(xs) {
                    *o = inv_m * v;
                }
            }
        }
        Ok(out)
    }

    /// `xᵀ Q y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check(x.len())?;
        self.check(y.len())?;
        let inv_m = self.inv_m();
        let mut total = T::zero();
        for b in self.blocks() {
            if !b.active {
                continue;
            }
            let xs = &x[b.start..b.start + b.len];
            let ys = &y[b.start..b.start + b.len];
            let xy: T = xs.iter().zip(ys).map(|(&a, &c)| a * c).sum();
            if self.exact {
                let k1 = T::from_count(b.len - 1);
                let sx: T = xs.iter().copied().sum();
                let sy: T = ys.iter().copied().sum();
                total = total + inv_m * (T::from_count(b.len) * xy - sx * sy) / k1;
            } else {
                total = total + inv_m * xy;
            }
        }
        Ok(total)
    }

    /// `aᵀ Q b` for `±1` margin columns, with exact integer accumulation.
    pub fn bilinear_signs(&self, a: &[i8], c: &[i8]) -> T {
        let inv_m = self.inv_m();
        let mut total = T::zero();
        for b in self.blocks() {
            if !b.active {
                continue;
            }
            let xs = &a[b.start..b.start + b.len];
            let ys = &c[b.start..b.start + b.len];
            let xy: i64 = xs.iter().zip(ys).map(|(&p, &q)| (p * q) as i64).sum();
            let xy = T::from_i64(xy).unwrap();
            if self.exact {
                let sx: i64 = xs.iter().map(|&p| p as i64).sum();
                let sy: i64 = ys.iter().map(|&p| p as i64).sum();
                let k = T::from_count(b.len);
                let sxy = T::from_i64(sx).unwrap() * T::from_i64(sy).unwrap();
                total = total + inv_m * (k * xy - sxy) / T::from_count(b.len - 1);
            } else {
                total = total + inv_m * xy;
            }
        }
        total
    }

    /// `(Q + δI)⁻¹ v` in closed form (Sherman–Morrison per block).
    pub fn solve_regularized(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v.len())?;
        let delta = self.delta;
        if !(delta > T::zero()) {
            return Err(Error::InvalidArgument("delta must be positive to invert Q".into()));
        }
        let inv_m = self.inv_m();
        let mut out = vec![T::zero(); v.len()];
        for b in self.blocks() {
            let vs = &v[b.start..b.start + b.len];
            let os = &mut out[b.start..b.start + b.len];
            if !b.active {
                for (o, &x) in os.iter_mut().zip(vs) {
                    *o = x / delta;
                }
            } else if self.exact {
                // (cI - βJ)⁻¹ = I/c + β/(c δ) J with c = α + δ, since c - β len = δ.
                let k1 = T::from_count(b.len - 1);
                let alpha = inv_m * T::from_count(b.len) / k1;
                let beta = inv_m / k1;
                let c = alpha + delta;
                let s: T = vs.iter().copied().sum();
                let shift = beta * s / (c * delta);
                for (o, &x) in os.iter_mut().zip(vs) {
                    *o = x / c + shift;
                }
            } else {
                for (o, &x) in os.iter_mut().zip(vs) {
                    *o = x / (inv_m + delta);
                }
            }
        }
        Ok(out)
    }

    /// Dense `m × m` matrix, row-major. Intended for tests and small problems.
    pub fn to_dense(&self) -> Vec<T> {
        let m = self.m();
        let mut out = vec![T::zero(); m * m];
        for b in self.blocks() {
            if !b.active {
                continue;
            }
            for i in b.start..b.start + b.len {
                for k in b.start..b.start + b.len {
                    out[i * m + k] = if i == k { self.block_diag() } else { self.block_offdiag(b.len) };
                }
            }
        }
        out
    }
}

/// Constructs `Q`. Exact mode rejects singleton classes that it would divide by.
pub fn build_q_matrix<T: Scalar>(m1: usize, m2: usize, mode: QMode, exact: bool) -> Result<QMatrix<T>> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::InvalidDataset("both classes must be non-empty".into()));
    }
    if exact {
        if m1 < 2 {
            return Err(Error::DegenerateClass { class: "positive", count: m1 });
        }
        if mode == QMode::Lda && m2 < 2 {
            return Err(Error::DegenerateClass { class: "negative", count: m2 });
        }
    }
    Ok(QMatrix { mode, exact, m1, m2, delta: T::lit(DEFAULT_DELTA) })
}

/// `ρᵀ Q ρ`.
pub fn quadratic_form<T: Scalar>(q: &QMatrix<T>, rho: &[T]) -> Result<T> {
    q.bilinear(rho, rho)
}
