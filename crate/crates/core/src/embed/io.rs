// SPDX-License-Identifier: Apache-2.0

//! Embedding export: CSV (`label,f0,...,f{d-1}`), a binary cache, and
//! whitespace-separated walk dumps.
//!
//! Binary cache layout (little endian): magic `GFDREMB\0`, u32 version,
//! u64 rows, u64 dim, then per row a u32 label length, label bytes and
//! `dim` f64 values.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{EmbedError, EmbeddingMatrix};

const MAGIC: &[u8; 8] = b"GFDREMB\0";
const VERSION: u32 = 1;

pub fn write_embeddings_csv<W: Write>(m: &EmbeddingMatrix, out: W) -> Result<(), EmbedError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    header.extend((0..m.dim).map(|k| format!("f{k}")));
    w.write_record(&header)?;
    for (i, label) in m.node_labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(m.row(i).iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings_csv<R: Read>(input: R) -> Result<EmbeddingMatrix, EmbedError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0) != Some("label") {
        return Err(EmbedError::Format("first column must be `label`".into()));
    }
    let dim = header.len() - 1;
    for (k, h) in header.iter().skip(1).enumerate() {
        if h != format!("f{k}") {
            return Err(EmbedError::Format(format!("unexpected column `{h}`")));
        }
    }
    let mut node_labels = Vec::new();
    let mut vectors = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != dim + 1 {
            return Err(EmbedError::Format(format!("row for `{}` has {} columns", &rec[0], rec.len())));
        }
        node_labels.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| EmbedError::Format(format!("bad number `{field}`")))?;
            vectors.push(v);
        }
    }
    Ok(EmbeddingMatrix { node_labels, dim, vectors, context_vectors: Vec::new() })
}

pub fn write_embedding_cache<W: Write>(m: &EmbeddingMatrix, mut out: W) -> Result<(), EmbedError> {
    out.write_all(MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u64::<LittleEndian>(m.rows() as u64)?;
    out.write_u64::<LittleEndian>(m.dim as u64)?;
    for (i, label) in m.node_labels.iter().enumerate() {
        out.write_u32::<LittleEndian>(label.len() as u32)?;
        out.write_all(label.as_bytes())?;
        for &x in m.row(i) {
            out.write_f64::<LittleEndian>(x)?;
        }
    }
    Ok(())
}

pub fn read_embedding_cache<R: Read>(mut input: R) -> Result<EmbeddingMatrix, EmbedError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(EmbedError::Format("not an embedding cache".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(EmbedError::Format(format!("unsupported cache version {version}")));
    }
    let rows = input.read_u64::<LittleEndian>()? as usize;
    let dim = input.read_u64::<LittleEndian>()? as usize;
    let mut node_labels = Vec::with_capacity(rows);
    let mut vectors = Vec::with_capacity(rows * dim);
    for _ in 0..rows {
        let len = input.read_u32::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        input.read_exact(&mut buf)?;
        node_labels.push(String::from_utf8(buf).map_err(|_| EmbedError::Format("label is not UTF-8".into()))?);
        for _ in 0..dim {
            vectors.push(input.read_f64::<LittleEndian>()?);
        }
    }
    Ok(EmbeddingMatrix { node_labels, dim, vectors, context_vectors: Vec::new() })
}

pub fn write_walks<W: Write>(corpus: &[Vec<u32>], mut out: W) -> std::io::Result<()> {
    for walk in corpus {
        let line: Vec<String> = walk.iter().map(u32::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(values: Vec<f64>, dim: usize) -> EmbeddingMatrix {
        let rows = values.len() / dim;
        EmbeddingMatrix {
            node_labels: (0..rows).map(|i| format!("n{i}")).collect(),
            dim,
            vectors: values,
            context_vectors: Vec::new(),
        }
    }

    #[test]
    fn csv_header() {
        let m = matrix(vec![0.5, -1.0, 2.0, 0.25], 2);
        let mut buf = Vec::new();
        write_embeddings_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "label,f0,f1\nn0,0.5,-1\nn1,2,0.25\n");
    }

    #[test]
    fn rejects_foreign_cache() {
        assert!(matches!(read_embedding_cache(&b"NOTMAGIC\x01\0\0\0"[..]), Err(EmbedError::Format(_))));
    }

    proptest! {
        #[test]
        fn csv_and_cache_preserve_values(values in prop::collection::vec(-1e6f64..1e6, 1..10)) {
            let m = matrix(values, 1);
            let mut csv_buf = Vec::new();
            write_embeddings_csv(&m, &mut csv_buf).unwrap();
            prop_assert_eq!(read_embeddings_csv(&csv_buf[..]).unwrap(), m.clone());
            let mut bin = Vec::new();
            write_embedding_cache(&m, &mut bin).unwrap();
            prop_assert_eq!(read_embedding_cache(&bin[..]).unwrap(), m);
        }
    }
}
