//! Compressed-row sparse matrices with a fixed, mesh-derived pattern.

use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the node-adjacency pattern of `mesh` (diagonal
    /// included).
    pub fn from_mesh_pattern(mesh: &Mesh) -> Self {
        let n = mesh.num_nodes();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in &mesh.triangles {
            for &a in t {
                for &b in t {
                    adj[a].push(b);
                }
            }
        }
        Self::from_adjacency(adj)
    }

    pub fn from_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        let n = adj.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Dense-to-sparse conversion, keeping exact zeros out of the pattern.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let adj = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut v: Vec<usize> = r.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(j, _)| j).collect();
                v.push(i);
                v
            })
            .collect();
        let mut m = Self::from_adjacency(adj);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                if x != 0.0 {
                    m.add(i, j, x);
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].binary_search(&j).ok().map(|k| s + k)
    }

    /// Adds `v` to entry `(i, j)`; panics if the entry is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Zeroes row and column `c`, sets the diagonal to one.
    pub(crate) fn eliminate(&mut self, c: usize) {
        let (s, e) = (self.row_ptr[c], self.row_ptr[c + 1]);
        for k in s..e {
            let i = self.col_idx[k];
            if i != c {
                if let Some(p) = self.position(i, c) {
                    self.values[p] = 0.0;
                }
            }
        }
        for k in s..e {
            self.values[k] = if self.col_idx[k] == c { 1.0 } else { 0.0 };
        }
    }

    /// Column `c` as `(row, value)` pairs, using symmetry of the pattern.
    pub(crate) fn column(&self, c: usize) -> Vec<(usize, f64)> {
        self.row(c).map(|(j, _)| (j, self.get(j, c))).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
