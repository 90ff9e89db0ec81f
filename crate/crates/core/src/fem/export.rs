//! Matrix-Market style text dumps of the assembled operators, for debugging.

use std::io::{self, Write};

use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;

pub fn write_matrix_market<W: Write>(mut w: W, a: &CsrMatrix<f64>) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplet_iter() {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_vector_market<W: Write>(mut w: W, f: &DVector<f64>) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", f.len())?;
    for v in f.iter() {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra_sparse::CooMatrix;

    #[test]
    fn header_and_entries() {
        let mut coo = CooMatrix::new(2, 2);
        coo.push(0, 1, 2.5);
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &CsrMatrix::from(&coo)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[1], "2 2 1");
        assert!(lines[2].starts_with("1 2 2.5"));
    }
}
