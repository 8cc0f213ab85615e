//! Binary on-disk cache for LOD bases.
//!
//! Layout (little endian): magic `LODBASIS`, format version `u32`, then the
//! header scalars, the CSR arrays of `Bᵀ`, the three dense corrected
//! matrices in column-major order, and a trailing SHA-256 of everything
//! before it. Files are written to a temporary name and renamed into place.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::Mat;
use sha2::{Digest, Sha256};

use super::basis::{build_from_setup, Layers, LodBasis};
use super::corrector::CorrectorSetup;
use super::form::BilinearFormSpec;
use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::fem::Dofs;
use crate::mesh::{build_structured_mesh, Mesh, RefinementMap};
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;

const MAGIC: &[u8; 8] = b"LODBASIS";
pub const FORMAT_VERSION: u32 = 1;

/// Hash of a coefficient's values at the degree-4 quadrature points of
/// every element of `mesh`.
pub fn coefficient_fingerprint(field: &CoefficientField, mesh: &Mesh) -> [u8; 32] {
    let rule = QuadratureRule::degree4();
    let mut h = Sha256::new();
    for e in 0..mesh.n_elements() {
        for p in rule.map(&mesh.element_coords(e)) {
            h.update(field.eval(p[0], p[1]).to_le_bytes());
        }
    }
    h.finalize().into()
}

/// Cache key for a basis: mesh sizes, coefficient fingerprints, layers and
/// shift.
pub fn basis_key(refmap: &RefinementMap, form: &BilinearFormSpec, layers: Layers) -> String {
    let mut h = Sha256::new();
    h.update(MAGIC);
    h.update(FORMAT_VERSION.to_le_bytes());
    h.update((refmap.coarse().n_side() as u64).to_le_bytes());
    h.update((refmap.factor() as u64).to_le_bytes());
    h.update((layers.resolve(refmap.coarse()) as u64).to_le_bytes());
    h.update(form.sigma().to_le_bytes());
    h.update(coefficient_fingerprint(form.b(), refmap.fine()));
    h.update(coefficient_fingerprint(form.v(), refmap.fine()));
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A directory of cached bases.
#[derive(Debug, Clone)]
pub struct BasisCache {
    dir: PathBuf,
}

/// One file in the cache directory.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub path: PathBuf,
    pub bytes: u64,
    pub coarse_side: Option<usize>,
    pub factor: Option<usize>,
    pub layers: Option<usize>,
}

impl BasisCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        BasisCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.lodb"))
    }

    /// Loads the basis for `key` if present. A corrupt file is an error.
    pub fn load(&self, key: &str) -> Result<Option<LodBasis>> {
        let path = self.path_for(key);
        if !path.exists() {
            return Ok(None);
        }
        let mut bytes = Vec::new();
        BufReader::new(fs::File::open(&path)?).read_to_end(&mut bytes)?;
        decode(&bytes).map(Some).map_err(|detail| Error::Cache { path, detail })
    }

    pub fn store(&self, key: &str, basis: &LodBasis) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(key);
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            w.write_all(&encode(basis))?;
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Returns the cached basis or builds and stores it. The flag reports a
    /// cache hit. Corrupt entries are rebuilt.
    pub fn get_or_build(
        &self,
        refmap: &RefinementMap,
        form: &BilinearFormSpec,
        layers: Layers,
    ) -> Result<(LodBasis, bool)> {
        let key = basis_key(refmap, form, layers);
        if let Ok(Some(b)) = self.load(&key) {
            return Ok((b, true));
        }
        let setup = CorrectorSetup::new(refmap, form)?;
        let basis = build_from_setup(&setup, layers)?;
        self.store(&key, &basis)?;
        Ok((basis, false))
    }

    pub fn entries(&self) -> Result<Vec<CacheEntry>> {
        if !self.dir.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "lodb") {
                let bytes = fs::metadata(&path)?.len();
                let header = read_header(&path).ok();
                out.push(CacheEntry {
                    path,
                    bytes,
                    coarse_side: header.map(|h| h.0),
                    factor: header.map(|h| h.1),
                    layers: header.map(|h| h.2),
                });
            }
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }

    /// Deletes every cached basis; returns how many files were removed.
    pub fn clear(&self) -> Result<usize> {
        let entries = self.entries()?;
        for e in &entries {
            fs::remove_file(&e.path)?;
        }
        Ok(entries.len())
    }
}

fn read_header(path: &Path) -> std::result::Result<(usize, usize, usize), String> {
    let mut buf = [0u8; 8 + 4 + 24];
    fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut buf))
        .map_err(|e| e.to_string())?;
    let mut r = Reader { buf: &buf, pos: 0 };
    r.magic()?;
    Ok((r.usize()?, r.usize()?, r.usize()?))
}

fn encode(b: &LodBasis) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [b.coarse_side, b.factor, b.layers, usize::from(b.saturated)] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&b.sigma.to_le_bytes());
    let bt = &b.bt;
    for v in [bt.n_rows(), bt.n_cols(), bt.nnz()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for &o in bt.row_offsets() {
        out.extend_from_slice(&(o as u64).to_le_bytes());
    }
    for &c in bt.col_indices() {
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    for &v in bt.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for m in [&b.stiffness, &b.mass_v, &b.mass] {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated file")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn magic(&mut self) -> std::result::Result<(), String> {
        if self.take(8)? != MAGIC {
            return Err("bad magic".into());
        }
        let version = u32::from_le_bytes(self.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(format!("format version {version}, expected {FORMAT_VERSION}"));
        }
        Ok(())
    }

    fn usize(&mut self) -> std::result::Result<usize, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn decode(bytes: &[u8]) -> std::result::Result<LodBasis, String> {
    if bytes.len() < 32 {
        return Err("truncated file".into());
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch".into());
    }
    let mut r = Reader { buf: body, pos: 0 };
    r.magic()?;
    let coarse_side = r.usize()?;
    let factor = r.usize()?;
    let layers = r.usize()?;
    let saturated = r.usize()? != 0;
    let sigma = r.f64()?;
    let (rows, cols, nnz) = (r.usize()?, r.usize()?, r.usize()?);
    let offsets = (0..=rows).map(|_| r.usize()).collect::<std::result::Result<Vec<_>, _>>()?;
    let idx = (0..nnz)
        .map(|_| r.u32().map(|c| c as usize))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let vals = (0..nnz).map(|_| r.f64()).collect::<std::result::Result<Vec<_>, _>>()?;
    let bt = CsrMatrix::from_parts(rows, cols, offsets, idx, vals).map_err(|e| e.to_string())?;
    let mut mats = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut m = Mat::<f64>::zeros(rows, rows);
        for j in 0..rows {
            for i in 0..rows {
                m[(i, j)] = r.f64()?;
            }
        }
        mats.push(m);
    }
    if r.pos != body.len() {
        return Err("trailing bytes".into());
    }
    let coarse = build_structured_mesh(coarse_side).map_err(|e| e.to_string())?;
    let fine = build_structured_mesh(coarse_side * factor).map_err(|e| e.to_string())?;
    let coarse_dofs = Dofs::interior(&coarse);
    let fine_dofs = Dofs::interior(&fine);
    if coarse_dofs.len() != rows || fine_dofs.len() != cols {
        return Err("dimensions do not match the recorded mesh sizes".into());
    }
    let mass = mats.pop().unwrap();
    let mass_v = mats.pop().unwrap();
    let stiffness = mats.pop().unwrap();
    Ok(LodBasis {
        coarse_side,
        factor,
        layers,
        saturated,
        sigma,
        coarse_dofs,
        fine_dofs,
        bt,
        stiffness,
        mass_v,
        mass,
    })
}
