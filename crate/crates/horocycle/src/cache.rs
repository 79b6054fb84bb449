//! On-disk eigenvalue tables: one binary file per weight, sealed by a
//! SHA-256 trailer, loaded back bit-for-bit.
//!
//! The format stores every table entry exactly as it sits in memory (sign,
//! exponent, mantissa limbs, error bound), so a loaded form is
//! indistinguishable from a freshly built one and a rebuilt file is
//! byte-identical to the original. Layout, all little-endian:
//!
//! ```text
//! magic "HOROTBL1" | version u32 | weight u32 | dim u32
//! per form:
//!   index u32 | nlimbs u8 | cutoff u64 | eigen_err f64 | table_len u64
//!   (table_len − 1) entries for n = 1..table_len
//!   nsparse u64 | nsparse × (n u64, entry)
//! sha256[32] over everything above
//! entry := sign i8 | exp i64 | nlimbs u8 | mant u64×nlimbs | err f64
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::engine::{eigenforms_with, Eigenform, EigenformRequest, VerifyReport};
use crate::mpf::Mpf;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"HOROTBL1";
const VERSION: u32 = 1;

/// The file a weight's tables live in under `dir`.
pub fn table_path(dir: &Path, weight: u32) -> PathBuf {
    dir.join(format!("weight_{weight}.htbl"))
}

fn put_mpf(out: &mut Vec<u8>, x: &Mpf, err: f64) {
    let (sign, exp, nlimbs, mant) = x.to_raw();
    out.push(sign as u8);
    out.extend_from_slice(&exp.to_le_bytes());
    out.push(nlimbs);
    for limb in &mant[..nlimbs as usize] {
        out.extend_from_slice(&limb.to_le_bytes());
    }
    out.extend_from_slice(&err.to_bits().to_le_bytes());
}

/// Serialize one weight's forms and write them atomically (via a sibling
/// temporary file) to `dir`, creating it if needed. Returns the final path.
pub fn save_tables(dir: &Path, forms: &[Eigenform]) -> Result<PathBuf> {
    let first = forms
        .first()
        .ok_or_else(|| Error::BadRequest("no forms to save".into()))?;
    let weight = first.weight;
    assert!(
        forms.len() == first.dim && forms.iter().all(|f| f.weight == weight),
        "save_tables expects the complete set of forms of one weight"
    );
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&weight.to_le_bytes());
    out.extend_from_slice(&(forms.len() as u32).to_le_bytes());
    for (i, f) in forms.iter().enumerate() {
        assert_eq!(f.index, i, "forms must be saved in index order");
        out.extend_from_slice(&(f.index as u32).to_le_bytes());
        out.push(f.nlimbs);
        out.extend_from_slice(&f.cutoff.to_le_bytes());
        out.extend_from_slice(&f.eigen_err.to_bits().to_le_bytes());
        out.extend_from_slice(&(f.table.len() as u64).to_le_bytes());
        for n in 1..f.table.len() {
            put_mpf(&mut out, &f.table[n], f.table_err[n]);
        }
        out.extend_from_slice(&(f.sparse.len() as u64).to_le_bytes());
        for &(n, x, err) in &f.sparse {
            out.extend_from_slice(&n.to_le_bytes());
            put_mpf(&mut out, &x, err);
        }
    }
    let hash = Sha256::digest(&out);
    out.extend_from_slice(&hash);
    fs::create_dir_all(dir)?;
    let path = table_path(dir, weight);
    let tmp = dir.join(format!(".weight_{weight}.htbl.tmp"));
    fs::write(&tmp, &out)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::CacheFormat("file truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_bits(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn mpf(&mut self, want_nlimbs: u8) -> Result<(Mpf, f64)> {
        let sign = self.u8()? as i8;
        let exp = self.i64()?;
        let nlimbs = self.u8()?;
        if nlimbs != want_nlimbs {
            return Err(Error::CacheFormat(format!(
                "entry has {nlimbs} limbs where the form declares {want_nlimbs}"
            )));
        }
        let mut mant = [0u64; 4];
        for limb in mant.iter_mut().take(nlimbs as usize) {
            *limb = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        }
        let x = Mpf::from_raw(sign, exp, nlimbs, mant)
            .map_err(|e| Error::CacheFormat(format!("invalid stored value: {e}")))?;
        let err = self.f64_bits()?;
        if !(err >= 0.0) {
            return Err(Error::CacheFormat("negative or NaN error bound".into()));
        }
        Ok((x, err))
    }
}

/// Read back every form of `weight` from `dir`, verifying the hash trailer
/// and the structural invariants the engine guarantees.
pub fn load_tables(dir: &Path, weight: u32) -> Result<Vec<Eigenform>> {
    let buf = fs::read(table_path(dir, weight))?;
    if buf.len() < MAGIC.len() + 32 {
        return Err(Error::CacheFormat("file too short".into()));
    }
    let (body, trailer) = buf.split_at(buf.len() - 32);
    if Sha256::digest(body).as_slice() != trailer {
        return Err(Error::CacheFormat("checksum mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::CacheFormat("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::CacheFormat(format!("unsupported version {version}")));
    }
    let stored_weight = r.u32()?;
    if stored_weight != weight {
        return Err(Error::CacheFormat(format!(
            "file holds weight {stored_weight}, expected {weight}"
        )));
    }
    let dim = r.u32()? as usize;
    if dim == 0 {
        return Err(Error::CacheFormat("empty form set".into()));
    }
    let mut forms = Vec::with_capacity(dim);
    for want_index in 0..dim {
        let index = r.u32()? as usize;
        if index != want_index {
            return Err(Error::CacheFormat(format!(
                "form {index} out of order (expected {want_index})"
            )));
        }
        let nlimbs = r.u8()?;
        let cutoff = r.u64()?;
        let eigen_err = r.f64_bits()?;
        let table_len = r.u64()? as usize;
        if table_len < 2 || cutoff < (table_len - 1) as u64 {
            return Err(Error::CacheFormat("implausible table geometry".into()));
        }
        let mut table = Vec::with_capacity(table_len);
        let mut table_err = Vec::with_capacity(table_len);
        table.push(Mpf::zero(nlimbs));
        table_err.push(0.0);
        for _ in 1..table_len {
            let (x, err) = r.mpf(nlimbs)?;
            table.push(x);
            table_err.push(err);
        }
        let nsparse = r.u64()? as usize;
        let mut sparse = Vec::with_capacity(nsparse);
        let mut prev = 0u64;
        for _ in 0..nsparse {
            let n = r.u64()?;
            if n < table_len as u64 || n <= prev || n > cutoff {
                return Err(Error::CacheFormat("sparse section out of order".into()));
            }
            prev = n;
            let (x, err) = r.mpf(nlimbs)?;
            sparse.push((n, x, err));
        }
        forms.push(Eigenform {
            weight,
            index,
            dim,
            nlimbs,
            cutoff,
            table,
            table_err,
            sparse,
            eigen_err,
        });
    }
    if r.pos != body.len() {
        return Err(Error::CacheFormat("trailing bytes after last form".into()));
    }
    Ok(forms)
}

/// Load the stored tables for `req.weight` only if the file exists and
/// covers the request (same mantissa width, at least the requested range).
/// `Ok(None)` means absent, unreadable, or insufficient — the caller
/// decides whether to rebuild or to report a missing cache.
pub fn load_covering(dir: &Path, req: &EigenformRequest) -> Result<Option<Vec<Eigenform>>> {
    let (len, cutoff, nlimbs) = req.resolved()?;
    if !table_path(dir, req.weight).exists() {
        return Ok(None);
    }
    match load_tables(dir, req.weight) {
        Ok(forms)
            if forms[0].table.len() >= len
                && forms[0].cutoff >= cutoff
                && forms[0].nlimbs == nlimbs =>
        {
            Ok(Some(forms))
        }
        Ok(_) | Err(Error::CacheFormat(_)) | Err(Error::Io(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Serve the request from `dir` if a stored file already covers it;
/// otherwise build, save, and return the fresh forms. The report is
/// `None` on a cache hit.
pub fn ensure_tables(
    dir: &Path,
    req: &EigenformRequest,
) -> Result<(Vec<Eigenform>, Option<VerifyReport>)> {
    if let Some(forms) = load_covering(dir, req)? {
        return Ok((forms, None));
    }
    let (forms, report) = eigenforms_with(req)?;
    save_tables(dir, &forms)?;
    Ok((forms, Some(report)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::eigenforms;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let req = EigenformRequest {
            table_len: 300,
            prime_cutoff: 600,
            ..EigenformRequest::new(24)
        };
        let (built, _) = eigenforms_with(&req).unwrap();
        let path = save_tables(dir.path(), &built).unwrap();
        let loaded = load_tables(dir.path(), 24).unwrap();
        assert_eq!(loaded.len(), built.len());
        for (a, b) in built.iter().zip(loaded.iter()) {
            assert_eq!((a.weight, a.index, a.dim, a.nlimbs, a.cutoff), (b.weight, b.index, b.dim, b.nlimbs, b.cutoff));
            assert_eq!(a.eigen_err.to_bits(), b.eigen_err.to_bits());
            assert_eq!(a.table.len(), b.table.len());
            for n in 0..a.table.len() {
                assert_eq!(a.table[n].to_raw(), b.table[n].to_raw());
                assert_eq!(a.table_err[n].to_bits(), b.table_err[n].to_bits());
            }
            assert_eq!(a.sparse.len(), b.sparse.len());
            for (x, y) in a.sparse.iter().zip(b.sparse.iter()) {
                assert_eq!(x.0, y.0);
                assert_eq!(x.1.to_raw(), y.1.to_raw());
                assert_eq!(x.2.to_bits(), y.2.to_bits());
            }
        }
        // saving the loaded forms reproduces the file byte for byte
        let second = tempfile::tempdir().unwrap();
        let path2 = save_tables(second.path(), &loaded).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn rejects_damage() {
        let dir = tempfile::tempdir().unwrap();
        let forms = eigenforms(12, 150).unwrap();
        let path = save_tables(dir.path(), &forms).unwrap();
        let clean = fs::read(&path).unwrap();

        let mut corrupt = clean.clone();
        corrupt[clean.len() / 2] ^= 0x40;
        fs::write(&path, &corrupt).unwrap();
        assert!(matches!(load_tables(dir.path(), 12), Err(Error::CacheFormat(_))));

        fs::write(&path, &clean[..clean.len() - 7]).unwrap();
        assert!(matches!(load_tables(dir.path(), 12), Err(Error::CacheFormat(_))));

        let mut wrong_magic = clean.clone();
        wrong_magic[0] = b'X';
        fs::write(&path, &wrong_magic).unwrap();
        assert!(matches!(load_tables(dir.path(), 12), Err(Error::CacheFormat(_))));

        // a file stored under the wrong weight's name is refused
        fs::write(&path, &clean).unwrap();
        fs::copy(&path, table_path(dir.path(), 16)).unwrap();
        assert!(matches!(load_tables(dir.path(), 16), Err(Error::CacheFormat(_))));

        // missing files surface as I/O errors
        assert!(matches!(load_tables(dir.path(), 20), Err(Error::Io(_))));
    }

    #[test]
    fn ensure_builds_once_then_reuses() {
        let dir = tempfile::tempdir().unwrap();
        let req = EigenformRequest { table_len: 200, ..EigenformRequest::new(12) };
        let (first, report) = ensure_tables(dir.path(), &req).unwrap();
        assert!(report.is_some());
        let (again, report) = ensure_tables(dir.path(), &req).unwrap();
        assert!(report.is_none());
        assert_eq!(first[0].table[7].to_raw(), again[0].table[7].to_raw());
        // a smaller request is served by the same file
        let small = EigenformRequest { table_len: 100, ..EigenformRequest::new(12) };
        let (_, report) = ensure_tables(dir.path(), &small).unwrap();
        assert!(report.is_none());
        // a larger one forces a rebuild
        let big = EigenformRequest { table_len: 400, ..EigenformRequest::new(12) };
        let (bigger, report) = ensure_tables(dir.path(), &big).unwrap();
        assert!(report.is_some());
        assert_eq!(bigger[0].table.len(), 400);
        // corrupt file heals by rebuilding
        let path = table_path(dir.path(), 12);
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 1;
        fs::write(&path, &bytes).unwrap();
        let (_, report) = ensure_tables(dir.path(), &big).unwrap();
        assert!(report.is_some());
        assert!(load_tables(dir.path(), 12).is_ok());
    }
}
