//! word2vec binary I/O, embedding matrices aligned to a vocabulary, and the
//! average-vector featurizer.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;
use crate::textproc::{Vocabulary, PAD};

/// Range of the uniform initializer for rows missing from the pretrained table.
pub const INIT_RANGE: f64 = 0.25;

/// Pretrained vectors keyed by token, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    vectors: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            words: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Append an entry. A repeated token is stored (so files round-trip) but
    /// lookups keep resolving to its first occurrence.
    pub fn push(&mut self, word: impl Into<String>, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: vector.len(),
            });
        }
        let word = word.into();
        self.index.entry(word.clone()).or_insert(self.words.len());
        self.words.push(word);
        self.vectors.extend_from_slice(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words
            .iter()
            .zip(self.vectors.chunks_exact(self.dimension.max(1)))
            .map(|(w, v)| (w.as_str(), v))
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.vectors[i * self.dimension..(i + 1) * self.dimension])
    }
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: BufRead> CountingReader<R> {
    fn read_byte(&mut self) -> std::io::Result<Option<u8>> {
        let buf = self.inner.fill_buf()?;
        match buf.first() {
            Some(&b) => {
                self.inner.consume(1);
                self.offset += 1;
                Ok(Some(b))
            }
            None => Ok(None),
        }
    }

    fn peek_byte(&mut self) -> std::io::Result<Option<u8>> {
        Ok(self.inner.fill_buf()?.first().copied())
    }
}

/// Parse the word2vec binary format: an ASCII header `<count> <dim>\n`, then per
/// record the token bytes up to a single space, `dim` little-endian f32 values and
/// an optional newline.
pub fn read_word2vec<R: BufRead>(reader: R) -> Result<EmbeddingTable> {
    let mut r = CountingReader {
        inner: reader,
        offset: 0,
    };
    let mut header = Vec::new();
    loop {
        match r.read_byte()? {
            Some(b'\n') => break,
            Some(b) => header.push(b),
            None => return Err(Error::BadHeader("missing newline after header".into())),
        }
    }
    let header = String::from_utf8_lossy(&header);
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::BadHeader(format!("`{header}`")))
    };
    let (count, dimension) = match fields.as_slice() {
        [c, d] => (parse(c)?, parse(d)?),
        _ => return Err(Error::BadHeader(format!("`{header}`"))),
    };
    if dimension == 0 {
        return Err(Error::BadHeader("dimension must be positive".into()));
    }

    let mut table = EmbeddingTable::new(dimension);
    let mut word = Vec::new();
    let mut raw = vec![0u8; dimension * 4];
    let mut vector = vec![0f32; dimension];
    for record in 0..count {
        while r.peek_byte()? == Some(b'\n') {
            r.read_byte()?;
        }
        word.clear();
        loop {
            match r.read_byte()? {
                Some(b' ') => break,
                Some(b) => word.push(b),
                None => {
                    return Err(Error::Truncated {
                        record,
                        offset: r.offset,
                    })
                }
            }
        }
        let start = r.offset;
        let mut filled = 0;
        while filled < raw.len() {
            let n = r.inner.read(&mut raw[filled..])?;
            if n == 0 {
                return Err(Error::Truncated {
                    record,
                    offset: start + filled as u64,
                });
            }
            filled += n;
        }
        r.offset += raw.len() as u64;
        for (v, bytes) in vector.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        }
        table.push(String::from_utf8_lossy(&word).into_owned(), &vector)?;
    }
    Ok(table)
}

pub fn read_word2vec_binary(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_word2vec(BufReader::new(file))
}

pub fn write_word2vec<W: Write>(mut writer: W, table: &EmbeddingTable) -> Result<()> {
    write!(writer, "{} {}\n", table.len(), table.dimension())?;
    for (word, vector) in table.iter() {
        writer.write_all(word.as_bytes())?;
        writer.write_all(b" ")?;
        for v in vector {
            writer.write_all(&v.to_le_bytes())?;
        }
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_word2vec_binary(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_word2vec(BufWriter::new(file), table).map_err(|e| match e {
        Error::Stream(io) => Error::io(path, io),
        other => other,
    })
}

/// Dense `vocab_size x dimension` matrix, row-major, row `PAD` all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: usize,
    pub dimension: usize,
    pub data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }
}

/// Copy pretrained rows for tokens found in `table`; every other row except
/// `PAD` (including `UNK`) is drawn from U(-0.25, 0.25) with the seeded generator.
/// Pass `None` for a fully random initialization.
pub fn build_embedding_matrix(
    vocabulary: &Vocabulary,
    table: Option<&EmbeddingTable>,
    dimension: usize,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    if let Some(t) = table {
        if t.dimension() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                got: t.dimension(),
            });
        }
    }
    let mut rng = seed::rng(seed);
    let rows = vocabulary.len();
    let mut data = vec![0.0; rows * dimension];
    for i in 0..rows {
        if i == PAD {
            continue;
        }
        let row = &mut data[i * dimension..(i + 1) * dimension];
        let pretrained = vocabulary
            .token_at(i)
            .filter(|_| i > crate::textproc::UNK)
            .and_then(|t| table.and_then(|tab| tab.get(t)));
        match pretrained {
            Some(v) => {
                for (dst, &src) in row.iter_mut().zip(v) {
                    *dst = src as f64;
                }
            }
            None => {
                for dst in row.iter_mut() {
                    *dst = rng.random_range(-INIT_RANGE..INIT_RANGE);
                }
            }
        }
    }
    Ok(EmbeddingMatrix {
        rows,
        dimension,
        data,
    })
}

/// Mean of the vectors of tokens present in `table`; zero vector if none are.
pub fn average_vector<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0f64; table.dimension()];
    let mut found = 0usize;
    for t in tokens {
        if let Some(v) = table.get(t.as_ref()) {
            found += 1;
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += x as f64;
            }
        }
    }
    if found > 0 {
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    sum
}
