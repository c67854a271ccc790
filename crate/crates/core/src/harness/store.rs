//! Append-only record store: one JSON record per line in `<name>.jsonl`,
//! plus a sidecar `<name>.jsonl.idx` of `hash offset` lines.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::record::RunRecord;
use crate::{Error, Result};

pub struct RecordStore {
    path: PathBuf,
    index: HashMap<String, u64>,
    order: Vec<String>,
}

impl RecordStore {
    /// Opens or creates the store, rebuilding the index from the data file
    /// when the sidecar is missing or stale.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        OpenOptions::new().create(true).append(true).open(&path)?;
        let mut store = Self { path, index: HashMap::new(), order: Vec::new() };
        if !store.load_index()? {
            store.rebuild_index()?;
        }
        Ok(store)
    }

    fn index_path(&self) -> PathBuf {
        let mut p = self.path.clone().into_os_string();
        p.push(".idx");
        p.into()
    }

    fn load_index(&mut self) -> Result<bool> {
        let Ok(f) = File::open(self.index_path()) else {
            return Ok(false);
        };
        let data_len = std::fs::metadata(&self.path)?.len();
        for line in BufReader::new(f).lines() {
            let line = line?;
            let Some((hash, off)) = line.split_once(' ') else {
                return Ok(false);
            };
            let Ok(off) = off.parse::<u64>() else {
                return Ok(false);
            };
            if off >= data_len {
                return Ok(false);
            }
            if self.index.insert(hash.to_string(), off).is_none() {
                self.order.push(hash.to_string());
            }
        }
        Ok(true)
    }

    fn rebuild_index(&mut self) -> Result<()> {
        self.index.clear();
        self.order.clear();
        let mut reader = BufReader::new(File::open(&self.path)?);
        let mut offset = 0u64;
        let mut line = String::new();
        let mut idx = File::create(self.index_path())?;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            if !line.trim().is_empty() {
                let rec = RunRecord::from_json(line.trim_end())?;
                writeln!(idx, "{} {offset}", rec.config_hash)?;
                if self.index.insert(rec.config_hash.clone(), offset).is_none() {
                    self.order.push(rec.config_hash);
                }
            }
            offset += n as u64;
        }
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, hash: &str) -> bool {
        self.index.contains_key(hash)
    }

    /// Hashes in first-append order.
    pub fn hashes(&self) -> &[String] {
        &self.order
    }

    pub fn get(&self, hash: &str) -> Result<Option<RunRecord>> {
        let Some(&off) = self.index.get(hash) else {
            return Ok(None);
        };
        let mut f = File::open(&self.path)?;
        f.seek(SeekFrom::Start(off))?;
        let mut line = String::new();
        BufReader::new(f).read_line(&mut line)?;
        let rec = RunRecord::from_json(line.trim_end())?;
        if rec.config_hash != hash {
            return Err(Error::Io(format!("index points at a record for {}", rec.config_hash)));
        }
        Ok(Some(rec))
    }

    /// Appends a record; data line first, then its index entry.
    pub fn append(&mut self, record: &RunRecord) -> Result<()> {
        let line = record.to_json();
        let mut data = OpenOptions::new().append(true).open(&self.path)?;
        let offset = data.seek(SeekFrom::End(0))?;
        data.write_all(line.as_bytes())?;
        data.write_all(b"\n")?;
        data.sync_data()?;
        let mut idx = OpenOptions::new().create(true).append(true).open(self.index_path())?;
        writeln!(idx, "{} {offset}", record.config_hash)?;
        // later appends for the same hash supersede earlier ones
        if self.index.insert(record.config_hash.clone(), offset).is_none() {
            self.order.push(record.config_hash.clone());
        }
        Ok(())
    }

    pub fn records(&self) -> Result<Vec<RunRecord>> {
        self.order.iter().filter_map(|h| self.get(h).transpose()).collect()
    }
}
