//! `.ds` dataset files, all little-endian:
//!
//! ```text
//! "GFDS" u32 version=1
//! u64 n  u32 nx  u32 ny
//! nx × (u32 len, utf-8 bytes)   feature slot names
//! ny × (u32 len, utf-8 bytes)   target slot names
//! u8 has_normalizer  [nx f64 min, nx f64 max, ny f64 min, ny f64 max]
//! u64 n_train, n_train × u64   u64 n_test, n_test × u64
//! n·nx f64 features, n·ny f64 targets (row-major)
//! ```

use std::path::Path;

use super::IoError;
use crate::scenario::{Dataset, Normalizer};

const MAGIC: &[u8; 4] = b"GFDS";
const VERSION: u32 = 1;

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let n = ds.len();
    let mut out = Vec::with_capacity(64 + 8 * (ds.x.len() + ds.y.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(ds.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.ny() as u32).to_le_bytes());
    for name in ds.x_names.iter().chain(&ds.y_names) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    let floats = |out: &mut Vec<u8>, v: &[f64]| v.iter().for_each(|f| out.extend_from_slice(&f.to_le_bytes()));
    match (&ds.x_norm, &ds.y_norm) {
        (Some(xn), Some(yn)) => {
            out.push(1);
            for v in [&xn.min, &xn.max, &yn.min, &yn.max] {
                floats(&mut out, v);
            }
        }
        _ => out.push(0),
    }
    for idx in [&ds.train, &ds.test] {
        out.extend_from_slice(&(idx.len() as u64).to_le_bytes());
        idx.iter().for_each(|&i| out.extend_from_slice(&(i as u64).to_le_bytes()));
    }
    floats(&mut out, &ds.x);
    floats(&mut out, &ds.y);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| IoError::SchemaMismatch(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, IoError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self, elem: usize) -> Result<usize, IoError> {
        let n = self.u64()?;
        // reject counts that cannot fit in the remaining bytes before allocating
        if n.saturating_mul(elem as u64) > (self.buf.len() - self.pos) as u64 {
            return Err(IoError::SchemaMismatch(format!("count {n} exceeds file size")));
        }
        Ok(n as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, IoError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| IoError::SchemaMismatch("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn name(&mut self) -> Result<String, IoError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| IoError::SchemaMismatch("slot name is not utf-8".into()))
    }
}

pub fn decode_dataset(buf: &[u8]) -> Result<Dataset, IoError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(IoError::SchemaMismatch("not a dataset file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(IoError::SchemaMismatch(format!("unsupported version {version}")));
    }
    let n = r.u64()? as usize;
    let nx = r.u32()? as usize;
    let ny = r.u32()? as usize;
    let mut names = Vec::with_capacity((nx + ny).min(buf.len()));
    for _ in 0..nx + ny {
        names.push(r.name()?);
    }
    let y_names = names.split_off(nx);
    let mut ds = Dataset::empty(names, y_names);
    match r.u8()? {
        0 => {}
        1 => {
            let xn = Normalizer { min: r.f64s(nx)?, max: r.f64s(nx)? };
            let yn = Normalizer { min: r.f64s(ny)?, max: r.f64s(ny)? };
            ds.x_norm = Some(xn);
            ds.y_norm = Some(yn);
        }
        f => return Err(IoError::SchemaMismatch(format!("bad normalizer flag {f}"))),
    }
    for split in 0..2 {
        let len = r.count(8)?;
        let mut idx = Vec::with_capacity(len);
        for _ in 0..len {
            let i = r.u64()? as usize;
            if i >= n {
                return Err(IoError::SchemaMismatch(format!("split index {i} out of range")));
            }
            idx.push(i);
        }
        if split == 0 {
            ds.train = idx;
        } else {
            ds.test = idx;
        }
    }
    ds.x = r.f64s(n.checked_mul(nx).ok_or_else(|| IoError::SchemaMismatch("size overflow".into()))?)?;
    ds.y = r.f64s(n.checked_mul(ny).ok_or_else(|| IoError::SchemaMismatch("size overflow".into()))?)?;
    if r.pos != buf.len() {
        return Err(IoError::SchemaMismatch(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(ds)
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, encode_dataset(ds))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    decode_dataset(&std::fs::read(path)?)
}

/// Reads a dataset and checks its slot counts.
pub fn read_dataset_expecting(path: &Path, nx: usize, ny: usize) -> Result<Dataset, IoError> {
    let ds = read_dataset(path)?;
    if ds.nx() != nx || ds.ny() != ny {
        return Err(IoError::SchemaMismatch(format!(
            "expected {nx}x{ny} slots, file has {}x{}",
            ds.nx(),
            ds.ny()
        )));
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize, seed: u64) -> Dataset {
        let mut ds = Dataset::empty(vec!["a".into(), "b".into(), "ü".into()], vec!["y".into(), "z".into()]);
        let mut v = seed as f64 * 0.37 + 0.1;
        for _ in 0..n {
            for _ in 0..3 {
                v = (v * 7.31 + 0.123).fract() - 0.4;
                ds.x.push(v * 1e3);
            }
            ds.y.push(v.exp());
            ds.y.push(-v / 3.0);
        }
        if n >= 2 {
            ds.split_and_fit(0.5, seed);
        }
        ds
    }

    #[test]
    fn round_trip_bitwise() {
        let ds = sample(20, 3);
        assert_eq!(decode_dataset(&encode_dataset(&ds)).unwrap(), ds);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.ds");
        write_dataset(&ds, &p).unwrap();
        assert_eq!(read_dataset(&p).unwrap(), ds);
        assert!(matches!(read_dataset_expecting(&p, 4, 2), Err(IoError::SchemaMismatch(_))));
    }

    #[test]
    fn empty_dataset_round_trips() {
        let ds = sample(0, 1);
        assert_eq!(decode_dataset(&encode_dataset(&ds)).unwrap(), ds);
    }

    #[test]
    fn corrupt_files_rejected() {
        let bytes = encode_dataset(&sample(5, 2));
        for cut in [0, 3, 10, 30, bytes.len() - 1] {
            assert!(matches!(decode_dataset(&bytes[..cut]), Err(IoError::SchemaMismatch(_))), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_dataset(&bad), Err(IoError::SchemaMismatch(_))));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(decode_dataset(&long), Err(IoError::SchemaMismatch(_))));
    }

    proptest! {
        #[test]
        fn any_floats_round_trip(vals in prop::collection::vec(any::<f64>(), 0..40)) {
            let mut ds = Dataset::empty(vec!["x".into()], vec!["y".into()]);
            ds.x = vals.clone();
            ds.y = vals.iter().map(|v| -v).collect();
            let back = decode_dataset(&encode_dataset(&ds)).unwrap();
            prop_assert_eq!(back.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), vals.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }

        #[test]
        fn truncation_never_panics(cut in 0usize..400) {
            let bytes = encode_dataset(&sample(6, 9));
            let cut = cut.min(bytes.len());
            let _ = decode_dataset(&bytes[..cut]);
        }
    }
}
