//! Binary kernel snapshots for reuse across CLI invocations.
//!
//! Layout (little endian):
//!   bytes 0..8   magic "BGKERNL1"
//!   u32          version (1)
//!   u32          dimension d
//!   u32          points per axis
//!   u32          reserved (0)
//!   f64          box length L
//!   f64          time t
//!   2 M^2 f64    row-major complex entries (re, im interleaved)
//!
//! Values are written in f64 regardless of the working scalar type.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex;

use crate::error::SnapshotError;
use crate::grid::{Kernel, Lattice};
use crate::real::Real;

const MAGIC: &[u8; 8] = b"BGKERNL1";
const VERSION: u32 = 1;

pub fn write_kernel<T: Real>(path: &Path, kernel: &Kernel<T>, time: T) -> Result<(), SnapshotError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(kernel.lattice.dim() as u32).to_le_bytes())?;
    w.write_all(&(kernel.lattice.points_per_axis() as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&kernel.lattice.box_length().to_f64_lossy().to_le_bytes())?;
    w.write_all(&time.to_f64_lossy().to_le_bytes())?;
    for z in kernel.mat.iter() {
        w.write_all(&z.re.to_f64_lossy().to_le_bytes())?;
        w.write_all(&z.im.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub struct KernelSnapshot<T: Real> {
    pub kernel: Kernel<T>,
    pub time: T,
}

pub fn read_kernel<T: Real>(path: &Path) -> Result<KernelSnapshot<T>, SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| SnapshotError::Truncated)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32, SnapshotError> {
        r.read_exact(&mut u32buf).map_err(|_| SnapshotError::Truncated)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let dim = read_u32(&mut r)? as usize;
    let m_axis = read_u32(&mut r)? as usize;
    let _reserved = read_u32(&mut r)?;
    let mut read_f64 = |r: &mut BufReader<File>| -> Result<f64, SnapshotError> {
        r.read_exact(&mut f64buf).map_err(|_| SnapshotError::Truncated)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let len = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    let lattice = Lattice::<T>::new(dim, m_axis, T::of(len))?;
    let n = lattice.total_points();
    let mut mat = Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
    for i in 0..n {
        for j in 0..n {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            mat[(i, j)] = Complex::new(T::of(re), T::of(im));
        }
    }
    Ok(KernelSnapshot {
        kernel: Kernel::new(lattice, mat),
        time: T::of(time),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn roundtrip_bit_exact() {
        let l = Lattice::<f64>::new(1, 8, 3.0).unwrap();
        let mut state = 17u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mat = Array2::from_shape_fn((8, 8), |_| C64::new(rng(), rng()));
        let k = Kernel::new(l, mat);
        let dir = std::env::temp_dir().join("bosegas_snapshot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("k.bin");
        write_kernel(&path, &k, 0.625).unwrap();
        let snap = read_kernel::<f64>(&path).unwrap();
        assert_eq!(snap.time, 0.625);
        for (a, b) in k.mat.iter().zip(snap.kernel.mat.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        // corrupt magic
        std::fs::write(dir.join("bad.bin"), b"NOTAKERN").unwrap();
        assert!(matches!(
            read_kernel::<f64>(&dir.join("bad.bin")),
            Err(SnapshotError::BadMagic) | Err(SnapshotError::Truncated)
        ));
    }
}
