//! Structured triangulations of the unit square, uniform refinement and
//! element patches.
//!
//! Node `(i, j)` of an `n × n` grid has index `j * (n + 1) + i` and sits at
//! `(i / n, j / n)`. Every square cell is split along its bottom-left to
//! top-right diagonal into a lower and an upper triangle, both stored
//! counterclockwise.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};

/// A structured, counterclockwise-oriented triangulation of `[0, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n_side: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

impl Mesh {
    pub fn n_side(&self) -> usize {
        self.n_side
    }

    /// Mesh width `1 / n_side` (length of a cell edge).
    pub fn h(&self) -> f64 {
        1.0 / self.n_side as f64
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    /// Indices of the nodes on `∂Ω`, in increasing order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.boundary[i]).collect()
    }

    /// Indices of the nodes strictly inside `Ω`, in increasing order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| !self.boundary[i]).collect()
    }

    /// Vertex coordinates of element `e`.
    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of element `e` (positive for counterclockwise order).
    pub fn signed_area(&self, e: usize) -> f64 {
        let [p0, p1, p2] = self.element_coords(e);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// For every node, the elements that contain it.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_nodes()];
        for (e, tri) in self.elements.iter().enumerate() {
            for &v in tri {
                out[v].push(e);
            }
        }
        out
    }

    /// Unique undirected edges, each paired with the number of elements
    /// sharing it.
    pub fn edges(&self) -> Vec<([usize; 2], usize)> {
        let mut all: Vec<[usize; 2]> = Vec::with_capacity(3 * self.n_elements());
        for tri in &self.elements {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                all.push([a.min(b), a.max(b)]);
            }
        }
        all.sort_unstable();
        let mut out: Vec<([usize; 2], usize)> = Vec::new();
        for e in all {
            match out.last_mut() {
                Some((last, count)) if *last == e => *count += 1,
                _ => out.push((e, 1)),
            }
        }
        out
    }

    /// Writes the plain-text debugging format: a header line
    /// `nodes N elements M`, then one `x y` row per node, then one `a b c`
    /// row per element.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nodes {} elements {}", self.n_nodes(), self.n_elements())?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        for t in &self.elements {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.n_side + 1) + i
    }
}

/// Builds the uniform `n_side × n_side` grid with `2·n_side²` triangles.
pub fn build_structured_mesh(n_side: usize) -> Result<Mesh> {
    if n_side == 0 {
        return Err(Error::InvalidArgument("n_side must be at least 1".into()));
    }
    let n = n_side;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * (n + 1) + i;
            elements.push([a, a + 1, a + n + 2]);
            elements.push([a, a + n + 2, a + n + 1]);
        }
    }
    Ok(Mesh {
        n_side,
        nodes,
        elements,
        boundary,
    })
}

/// A coarse mesh together with its uniform refinement by an integer factor.
#[derive(Debug, Clone)]
pub struct RefinementMap {
    factor: usize,
    coarse: Mesh,
    fine: Mesh,
    element_children: Vec<Vec<usize>>,
    fine_parent: Vec<usize>,
    node_embedding: Vec<usize>,
}

/// Refines `coarse` uniformly: every coarse cell becomes `factor²` fine
/// cells with the same diagonal convention.
pub fn refine(coarse: &Mesh, factor: usize) -> Result<RefinementMap> {
    if factor == 0 {
        return Err(Error::InvalidArgument("refinement factor must be at least 1".into()));
    }
    let n = coarse.n_side;
    let r = factor;
    let fine = build_structured_mesh(n * r)?;
    let nf = n * r;

    let mut element_children = vec![Vec::with_capacity(r * r); coarse.n_elements()];
    let mut fine_parent = vec![0; fine.n_elements()];
    for fj in 0..nf {
        for fi in 0..nf {
            let (ci, cj) = (fi / r, fj / r);
            let (a, b) = (fi % r, fj % r);
            let coarse_lower = 2 * (cj * n + ci);
            let fine_lower = 2 * (fj * nf + fi);
            // Lower fine triangle sits below the coarse diagonal iff a >= b,
            // the upper one iff a > b.
            let parent_lower = if a >= b { coarse_lower } else { coarse_lower + 1 };
            let parent_upper = if a > b { coarse_lower } else { coarse_lower + 1 };
            fine_parent[fine_lower] = parent_lower;
            fine_parent[fine_lower + 1] = parent_upper;
        }
    }
    for (t, &k) in fine_parent.iter().enumerate() {
        element_children[k].push(t);
    }

    let node_embedding = (0..coarse.n_nodes())
        .map(|c| {
            let (i, j) = (c % (n + 1), c / (n + 1));
            fine.node_index(i * r, j * r)
        })
        .collect();

    Ok(RefinementMap {
        factor,
        coarse: coarse.clone(),
        fine,
        element_children,
        fine_parent,
        node_embedding,
    })
}

impl RefinementMap {
    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn coarse(&self) -> &Mesh {
        &self.coarse
    }

    pub fn fine(&self) -> &Mesh {
        &self.fine
    }

    /// Fine elements covering coarse element `k`.
    pub fn children(&self, k: usize) -> &[usize] {
        &self.element_children[k]
    }

    /// Coarse element containing fine element `t`.
    pub fn parent(&self, t: usize) -> usize {
        self.fine_parent[t]
    }

    /// Fine node index of every coarse node.
    pub fn node_embedding(&self) -> &[usize] {
        &self.node_embedding
    }

    /// Coarse element containing fine node `p` together with the three
    /// barycentric weights of `p` with respect to that element's vertices.
    pub fn locate_fine_node(&self, p: usize) -> (usize, [f64; 3]) {
        let n = self.coarse.n_side;
        let r = self.factor;
        let nf = n * r;
        let (fi, fj) = (p % (nf + 1), p / (nf + 1));
        let ci = (fi / r).min(n - 1);
        let cj = (fj / r).min(n - 1);
        let s = (fi - ci * r) as f64 / r as f64;
        let t = (fj - cj * r) as f64 / r as f64;
        let lower = 2 * (cj * n + ci);
        if s >= t {
            // vertices (a, a+1, a+n+2)
            (lower, [1.0 - s, s - t, t])
        } else {
            // vertices (a, a+n+2, a+n+1)
            (lower + 1, [1.0 - t, s, t - s])
        }
    }

    /// Patch of `layers` layers around coarse element `k`, with its fine
    /// node sets resolved on the fine mesh.
    pub fn patch(&self, k: usize, layers: usize) -> Result<Patch> {
        let mut patch = element_patch(&self.coarse, k, layers)?;
        patch.interior_fine_nodes = self.interior_fine_nodes(&patch.elements);
        Ok(patch)
    }

    /// Fine nodes strictly inside the union of the given coarse elements and
    /// off `∂Ω`.
    pub fn interior_fine_nodes(&self, coarse_elements: &[usize]) -> Vec<usize> {
        let fine = &self.fine;
        let mut covered = vec![0u8; fine.n_nodes()];
        for &k in coarse_elements {
            for &t in &self.element_children[k] {
                for &v in &fine.elements[t] {
                    covered[v] += 1;
                }
            }
        }
        // On this grid every interior node has exactly six incident triangles.
        (0..fine.n_nodes())
            .filter(|&v| !fine.boundary[v] && covered[v] == 6)
            .collect()
    }
}

/// Coarse element `center_element` together with `layers` layers of
/// vertex-adjacent elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub center_element: usize,
    pub layers: usize,
    /// Coarse elements in the patch, sorted.
    pub elements: Vec<usize>,
    /// Coarse nodes whose hat-function support meets the patch, sorted.
    pub coarse_nodes_in_patch: Vec<usize>,
    /// Nodes of the underlying (fine) mesh strictly inside the patch.
    pub interior_fine_nodes: Vec<usize>,
}

impl Patch {
    pub fn covers_mesh(&self, mesh: &Mesh) -> bool {
        self.elements.len() == mesh.n_elements()
    }
}

/// The `layers`-fold closure of `{k}` under shared-vertex adjacency.
///
/// Fine nodes are taken on `mesh` itself; use [`RefinementMap::patch`] to
/// resolve them on a refined mesh.
pub fn element_patch(mesh: &Mesh, k: usize, layers: usize) -> Result<Patch> {
    if k >= mesh.n_elements() {
        return Err(Error::InvalidArgument(format!(
            "element {k} out of range (mesh has {})",
            mesh.n_elements()
        )));
    }
    let node_elements = mesh.node_elements();
    let mut depth = vec![usize::MAX; mesh.n_elements()];
    depth[k] = 0;
    let mut queue = VecDeque::from([k]);
    while let Some(e) = queue.pop_front() {
        if depth[e] == layers {
            continue;
        }
        for &v in &mesh.elements[e] {
            for &nb in &node_elements[v] {
                if depth[nb] == usize::MAX {
                    depth[nb] = depth[e] + 1;
                    queue.push_back(nb);
                }
            }
        }
    }
    let elements: Vec<usize> = (0..mesh.n_elements()).filter(|&e| depth[e] != usize::MAX).collect();
    let mut coarse_nodes: Vec<usize> = elements.iter().flat_map(|&e| mesh.elements[e]).collect();
    coarse_nodes.sort_unstable();
    coarse_nodes.dedup();

    let mut covered = vec![0u8; mesh.n_nodes()];
    for &e in &elements {
        for &v in &mesh.elements[e] {
            covered[v] += 1;
        }
    }
    let interior = (0..mesh.n_nodes())
        .filter(|&v| !mesh.boundary[v] && covered[v] == 6)
        .collect();

    Ok(Patch {
        center_element: k,
        layers,
        elements,
        coarse_nodes_in_patch: coarse_nodes,
        interior_fine_nodes: interior,
    })
}
