//! Append-only JSON-lines journal shared by the durable backends.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Result, StorageError};

pub(crate) struct Journal<Op> {
    path: PathBuf,
    writer: BufWriter<File>,
    sync: bool,
    _op: PhantomData<fn(Op)>,
}

impl<Op: Serialize + DeserializeOwned> Journal<Op> {
    /// Feeds every existing entry to `replay`, then reopens for appending.
    pub(crate) fn open<F>(path: &Path, sync: bool, mut replay: F) -> Result<Self>
    where
        F: FnMut(Op),
    {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Op>(&line) {
                    Ok(op) => replay(op),
                    // A torn final write from a crash is tolerated; anything
                    // earlier means the file was damaged.
                    Err(_) if is_last_line(path, idx)? => break,
                    Err(_) => {
                        return Err(StorageError::CorruptJournal {
                            path: path.display().to_string(),
                            line: idx + 1,
                        })
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_owned(), writer: BufWriter::new(file), sync, _op: PhantomData })
    }

    pub(crate) fn append(&mut self, op: &Op) -> Result<()> {
        serde_json::to_writer(&mut self.writer, op)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        if self.sync {
            self.writer.get_ref().sync_data()?;
        }
        Ok(())
    }

    /// Atomically replaces the journal with the given operations.
    pub(crate) fn rewrite<'a, I>(&mut self, ops: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Op>,
        Op: 'a,
    {
        let tmp = self.path.with_extension("compact");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            for op in ops {
                serde_json::to_writer(&mut out, op)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            out.get_ref().sync_all()?;
        }
        fs::rename(&tmp, &self.path)?;
        let file = OpenOptions::new().append(true).open(&self.path)?;
        self.writer = BufWriter::new(file);
        Ok(())
    }
}

fn is_last_line(path: &Path, idx: usize) -> Result<bool> {
    let count = BufReader::new(File::open(path)?).lines().count();
    Ok(idx + 1 == count)
}
