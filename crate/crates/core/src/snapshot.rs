//! Binary field snapshots.
//!
//! Little-endian layout: magic `CSPD`, version `u32`, `n` as `u32`, `L` as
//! `f64`, representation `u8` (0 physical, 1 Fourier), component count `u8`,
//! then for every grid point in row-major order the components in turn,
//! each as real and imaginary `f64`.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Representation;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"CSPD";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub repr: Representation,
    pub components: Vec<Vec<Complex64>>,
}

impl Snapshot {
    pub fn new(grid: Grid, repr: Representation, components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.is_empty() || components.len() > u8::MAX as usize {
            return Err(Error::Shape(format!(
                "snapshot needs 1 to 255 components, got {}",
                components.len()
            )));
        }
        if let Some(c) = components.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::Shape(format!(
                "component has {} values, grid needs {}",
                c.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, repr, components })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.grid.n() as u32)?;
        w.write_f64::<LittleEndian>(self.grid.length())?;
        w.write_u8(match self.repr {
            Representation::Physical => 0,
            Representation::Fourier => 1,
        })?;
        w.write_u8(self.components.len() as u8)?;
        let mut buf = Vec::with_capacity(self.grid.len() * self.components.len() * 16);
        for idx in 0..self.grid.len() {
            for c in &self.components {
                buf.write_f64::<LittleEndian>(c[idx].re)?;
                buf.write_f64::<LittleEndian>(c[idx].im)?;
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = r.read_u32::<LittleEndian>()? as usize;
        let length = r.read_f64::<LittleEndian>()?;
        let grid = Grid::new(n, length).map_err(|e| Error::Format(e.to_string()))?;
        let repr = match r.read_u8()? {
            0 => Representation::Physical,
            1 => Representation::Fourier,
            other => return Err(Error::Format(format!("unknown representation tag {other}"))),
        };
        let count = r.read_u8()? as usize;
        if count == 0 {
            return Err(Error::Format("zero components".into()));
        }
        let mut bytes = vec![0u8; grid.len() * count * 16];
        r.read_exact(&mut bytes)?;
        let mut cur = &bytes[..];
        let mut components = vec![Vec::with_capacity(grid.len()); count];
        for _ in 0..grid.len() {
            for c in components.iter_mut() {
                let re = cur.read_f64::<LittleEndian>()?;
                let im = cur.read_f64::<LittleEndian>()?;
                c.push(Complex64::new(re, im));
            }
        }
        Self::new(grid, repr, components)
    }
}

impl<const C: usize> From<&crate::field::Field<C>> for Snapshot {
    fn from(f: &crate::field::Field<C>) -> Self {
        Self {
            grid: f.grid(),
            repr: f.repr(),
            components: f.components().to_vec(),
        }
    }
}

impl<const C: usize> TryFrom<Snapshot> for crate::field::Field<C> {
    type Error = Error;

    fn try_from(s: Snapshot) -> Result<Self> {
        let count = s.components.len();
        let comps: [Vec<Complex64>; C] = s
            .components
            .try_into()
            .map_err(|_| Error::Shape(format!("snapshot holds {count} components, expected {C}")))?;
        Self::from_components(s.grid, s.repr, comps)
    }
}
