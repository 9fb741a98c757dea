//! Range scans: a pool of workers computes primes independently while one
//! coordinator restores their order and owns the output files.
//!
//! Output goes to `<out>.partial` and `<aux>.partial` and is renamed into
//! place when the range is done. Every few seconds the coordinator records
//! how far the files are known to be complete in `<out>.ckpt`; a scan
//! restarted with the same configuration truncates the partial files to
//! that point and carries on, so the final files do not depend on where
//! (or whether) the scan was interrupted, nor on the number of workers.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::arith::primes_in_range;
use crate::par::Parallelism;
use crate::pipeline::{compute_irregular_with, IrregularRecord, PipelineOptions, Strategy};
use crate::results::{aux_lines, checksum_fail_line, header_line, record_line, summary_line, Summary};

/// Largest supported scan bound (exclusive).
pub const SCAN_LIMIT: u64 = 1 << 31;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid range: {0}")]
    BadRange(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path} does not belong to this scan ({reason}); delete it to start over")]
    CheckpointMismatch { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScanError + '_ {
    move |source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanConfig {
    pub from: u64,
    pub to: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub aux: PathBuf,
    pub force: Option<Strategy>,
    /// Worker threads with [`Parallelism::Rayon`], the calling thread
    /// alone with [`Parallelism::Sequential`].
    pub mode: Parallelism,
    pub checkpoint_every: Duration,
}

impl ScanConfig {
    /// Defaults: one worker per CPU, aux file next to the results file.
    pub fn new(from: u64, to: u64, out: impl Into<PathBuf>) -> Self {
        let out = out.into();
        let mut aux = out.clone().into_os_string();
        aux.push(".aux");
        ScanConfig {
            from,
            to,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out,
            aux: aux.into(),
            force: None,
            mode: Parallelism::default(),
            checkpoint_every: Duration::from_secs(10),
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.from < 5 || self.from > self.to || self.to >= SCAN_LIMIT {
            return Err(ScanError::BadRange(format!(
                "need 5 <= from <= to < 2^31, got from = {}, to = {}",
                self.from, self.to
            )));
        }
        if self.jobs == 0 {
            return Err(ScanError::BadRange("jobs must be at least 1".into()));
        }
        if self.out == self.aux {
            return Err(ScanError::BadRange("results and aux paths coincide".into()));
        }
        Ok(())
    }

    fn force_name(&self) -> &'static str {
        self.force.map_or("auto", Strategy::name)
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

/// Totals over the primes written so far. Only `summary` reaches the
/// results file; the rest is for progress reports.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScanTally {
    pub summary: Summary,
    /// `by_index[i]`: primes with `i_p = i`, checksum failures excluded.
    pub by_index: Vec<u64>,
    /// Indexed like [`Strategy::ALL`].
    pub by_strategy: [u64; 3],
    pub rejections: BTreeMap<String, u64>,
    /// Primes redone on the umbrella path after a failed checksum.
    pub retried: u64,
    pub last_p: Option<u64>,
}

impl ScanTally {
    fn add(&mut self, rec: &IrregularRecord) {
        self.summary.primes += 1;
        self.last_p = Some(rec.p);
        let s = Strategy::ALL.iter().position(|&s| s == rec.strategy).expect("known strategy");
        self.by_strategy[s] += 1;
        if let Some(why) = rec.rejection {
            *self.rejections.entry(why.name().to_string()).or_default() += 1;
        }
        self.retried += rec.retried as u64;
        if !rec.checksum_ok {
            self.summary.checksum_fail += 1;
            return;
        }
        let i = rec.irregular.len();
        if self.by_index.len() <= i {
            self.by_index.resize(i + 1, 0);
        }
        self.by_index[i] += 1;
        self.summary.irregular += (i > 0) as u64;
    }
}

/// Everything a resumed scan needs, as `key=value` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Checkpoint {
    from: u64,
    to: u64,
    force: String,
    results_len: u64,
    aux_len: u64,
    tally: ScanTally,
}

fn join(values: impl IntoIterator<Item = u64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl Checkpoint {
    fn render(&self) -> String {
        let t = &self.tally;
        let rejections: Vec<String> = t.rejections.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        format!(
            "#irregular-checkpoint v1\nfrom={}\nto={}\nforce={}\nresults_len={}\naux_len={}\n\
             primes={}\nirregular={}\nchecksum_fail={}\nlast_p={}\nby_index={}\n\
             by_strategy={}\nrejections={}\nretried={}\n",
            self.from,
            self.to,
            self.force,
            self.results_len,
            self.aux_len,
            t.summary.primes,
            t.summary.irregular,
            t.summary.checksum_fail,
            t.last_p.map_or(String::new(), |p| p.to_string()),
            join(t.by_index.iter().copied()),
            join(t.by_strategy),
            rejections.join(","),
            t.retried,
        )
    }

    fn parse(text: &str) -> Option<Checkpoint> {
        let mut lines = text.lines();
        if lines.next()? != "#irregular-checkpoint v1" {
            return None;
        }
        let fields: BTreeMap<&str, &str> = lines.filter_map(|l| l.split_once('=')).collect();
        let num = |k: &str| fields.get(k)?.parse::<u64>().ok();
        let list = |k: &str| -> Option<Vec<u64>> {
            let v = fields.get(k)?;
            if v.is_empty() {
                return Some(Vec::new());
            }
            v.split(',').map(|x| x.parse().ok()).collect()
        };
        let mut rejections = BTreeMap::new();
        for item in fields.get("rejections")?.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once(':')?;
            rejections.insert(k.to_string(), v.parse().ok()?);
        }
        let by_strategy: [u64; 3] = list("by_strategy")?.try_into().ok()?;
        let last_p = match *fields.get("last_p")? {
            "" => None,
            v => Some(v.parse().ok()?),
        };
        Some(Checkpoint {
            from: num("from")?,
            to: num("to")?,
            force: fields.get("force")?.to_string(),
            results_len: num("results_len")?,
            aux_len: num("aux_len")?,
            tally: ScanTally {
                summary: Summary {
                    primes: num("primes")?,
                    irregular: num("irregular")?,
                    checksum_fail: num("checksum_fail")?,
                },
                by_index: list("by_index")?,
                by_strategy,
                rejections,
                retried: num("retried")?,
                last_p,
            },
        })
    }
}

/// Primes of `[from, to]` in order, sieved a segment at a time.
struct PrimeStream {
    next_lo: u64,
    to: u64,
    buffer: VecDeque<u64>,
}

impl PrimeStream {
    const SEGMENT: u64 = 1 << 16;

    fn new(from: u64, to: u64) -> Self {
        PrimeStream {
            next_lo: from,
            to,
            buffer: VecDeque::new(),
        }
    }
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.buffer.is_empty() {
            if self.next_lo > self.to {
                return None;
            }
            let hi = self.next_lo.saturating_add(Self::SEGMENT - 1).min(self.to);
            self.buffer.extend(primes_in_range(self.next_lo, hi));
            self.next_lo = hi + 1;
        }
        self.buffer.pop_front()
    }
}

/// Progress callback: totals so far and elapsed time of this run.
pub type Progress<'a> = &'a mut dyn FnMut(&ScanTally, Duration);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanOutcome {
    pub tally: ScanTally,
    /// Primes already done by an earlier, interrupted run.
    pub resumed_primes: u64,
    pub elapsed: Duration,
}

struct Outputs {
    results: BufWriter<File>,
    aux: BufWriter<File>,
    results_path: PathBuf,
    aux_path: PathBuf,
}

impl Outputs {
    /// Opens (or reopens, truncated to `lens`) the partial files.
    fn open(results_path: PathBuf, aux_path: PathBuf, lens: Option<(u64, u64)>) -> Result<Self, ScanError> {
        let open = |path: &Path, len: Option<u64>| -> Result<BufWriter<File>, ScanError> {
            let mut file = OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(len.is_none())
                .open(path)
                .map_err(io_err(path))?;
            if let Some(len) = len {
                let actual = file.metadata().map_err(io_err(path))?.len();
                if actual < len {
                    return Err(ScanError::CheckpointMismatch {
                        path: path.to_path_buf(),
                        reason: format!("file has {actual} bytes, checkpoint expects {len}"),
                    });
                }
                file.set_len(len).map_err(io_err(path))?;
                file.seek(SeekFrom::End(0)).map_err(io_err(path))?;
            }
            Ok(BufWriter::new(file))
        };
        Ok(Outputs {
            results: open(&results_path, lens.map(|l| l.0))?,
            aux: open(&aux_path, lens.map(|l| l.1))?,
            results_path,
            aux_path,
        })
    }

    fn write(&mut self, text: &str, aux: bool) -> Result<(), ScanError> {
        let (w, path) = if aux {
            (&mut self.aux, &self.aux_path)
        } else {
            (&mut self.results, &self.results_path)
        };
        w.write_all(text.as_bytes()).map_err(io_err(path))
    }

    /// Flushes and returns the file lengths.
    fn sync(&mut self) -> Result<(u64, u64), ScanError> {
        let len = |w: &mut BufWriter<File>, path: &Path| -> Result<u64, ScanError> {
            w.flush().map_err(io_err(path))?;
            w.get_ref().sync_data().map_err(io_err(path))?;
            w.get_mut().stream_position().map_err(io_err(path))
        };
        Ok((
            len(&mut self.results, &self.results_path)?,
            len(&mut self.aux, &self.aux_path)?,
        ))
    }
}

struct Coordinator<'c, 'p> {
    cfg: &'c ScanConfig,
    out: Outputs,
    tally: ScanTally,
    ckpt_path: PathBuf,
    last_ckpt: Instant,
    started: Instant,
    progress: Option<Progress<'p>>,
}

impl Coordinator<'_, '_> {
    fn accept(&mut self, rec: &IrregularRecord) -> Result<(), ScanError> {
        self.tally.add(rec);
        if !rec.checksum_ok {
            self.out.write(&checksum_fail_line(rec.p), false)?;
        } else {
            if !rec.irregular.is_empty() {
                self.out.write(&record_line(rec.p, &rec.irregular), false)?;
            }
            self.out.write(&aux_lines(rec.p, &rec.ten_pairs), true)?;
        }
        if self.last_ckpt.elapsed() >= self.cfg.checkpoint_every {
            self.checkpoint()?;
        }
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<(), ScanError> {
        let (results_len, aux_len) = self.out.sync()?;
        let ckpt = Checkpoint {
            from: self.cfg.from,
            to: self.cfg.to,
            force: self.cfg.force_name().to_string(),
            results_len,
            aux_len,
            tally: self.tally.clone(),
        };
        let tmp = with_suffix(&self.ckpt_path, ".tmp");
        fs::write(&tmp, ckpt.render()).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &self.ckpt_path).map_err(io_err(&self.ckpt_path))?;
        self.last_ckpt = Instant::now();
        if let Some(progress) = self.progress.as_mut() {
            progress(&self.tally, self.started.elapsed());
        }
        Ok(())
    }
}

fn load_checkpoint(cfg: &ScanConfig, path: &Path) -> Result<Option<Checkpoint>, ScanError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mismatch = |reason: String| ScanError::CheckpointMismatch {
        path: path.to_path_buf(),
        reason,
    };
    let ckpt = Checkpoint::parse(&text).ok_or_else(|| mismatch("unreadable".into()))?;
    if (ckpt.from, ckpt.to, ckpt.force.as_str()) != (cfg.from, cfg.to, cfg.force_name()) {
        return Err(mismatch(format!(
            "it is for from={} to={} force={}",
            ckpt.from, ckpt.to, ckpt.force
        )));
    }
    Ok(Some(ckpt))
}

/// Scans `[cfg.from, cfg.to]`, resuming from a checkpoint if one is found.
pub fn run_scan(cfg: &ScanConfig, progress: Option<Progress<'_>>) -> Result<ScanOutcome, ScanError> {
    cfg.validate()?;
    let started = Instant::now();
    let ckpt_path = with_suffix(&cfg.out, ".ckpt");
    let results_partial = with_suffix(&cfg.out, ".partial");
    let aux_partial = with_suffix(&cfg.aux, ".partial");
    let resume = load_checkpoint(cfg, &ckpt_path)?;
    let resumed_primes = resume.as_ref().map_or(0, |c| c.tally.summary.primes);
    let mut coord = Coordinator {
        cfg,
        out: Outputs::open(
            results_partial.clone(),
            aux_partial.clone(),
            resume.as_ref().map(|c| (c.results_len, c.aux_len)),
        )?,
        tally: resume.as_ref().map(|c| c.tally.clone()).unwrap_or_default(),
        ckpt_path: ckpt_path.clone(),
        last_ckpt: Instant::now(),
        started,
        progress,
    };
    if resume.is_none() {
        coord.out.write(&header_line(cfg.from, cfg.to), false)?;
    }
    let first = coord.tally.last_p.map_or(cfg.from, |p| p + 1);
    let primes = PrimeStream::new(first, cfg.to);
    let opts = PipelineOptions {
        force: cfg.force,
        rows: Parallelism::Sequential,
        retry_on_checksum_failure: true,
    };

    if cfg.mode.is_parallel() && cfg.jobs > 1 {
        run_workers(cfg.jobs, primes, opts, &mut coord)?;
    } else {
        for p in primes {
            coord.accept(&compute_irregular_with(p, opts))?;
        }
    }

    coord.out.write(&summary_line(&coord.tally.summary), false)?;
    coord.out.sync()?;
    drop(coord.out);
    fs::rename(&results_partial, &cfg.out).map_err(io_err(&cfg.out))?;
    fs::rename(&aux_partial, &cfg.aux).map_err(io_err(&cfg.aux))?;
    match fs::remove_file(&ckpt_path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(io_err(&ckpt_path)(e)),
        _ => {}
    }
    Ok(ScanOutcome {
        tally: coord.tally,
        resumed_primes,
        elapsed: started.elapsed(),
    })
}

/// Workers pull `(sequence number, prime)` from a shared queue and send
/// records back; the coordinator (this thread) writes them in sequence.
fn run_workers(
    jobs: usize,
    primes: PrimeStream,
    opts: PipelineOptions,
    coord: &mut Coordinator<'_, '_>,
) -> Result<(), ScanError> {
    let queue = Mutex::new(primes.enumerate());
    let (tx, rx) = mpsc::channel::<(usize, IrregularRecord)>();
    let stop = std::sync::atomic::AtomicBool::new(false);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let (queue, stop) = (&queue, &stop);
            s.spawn(move || {
                while !stop.load(std::sync::atomic::Ordering::Relaxed) {
                    let Some((seq, p)) = queue.lock().unwrap().next() else {
                        break;
                    };
                    if tx.send((seq, compute_irregular_with(p, opts))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut next = 0usize;
        for (seq, rec) in rx {
            pending.insert(seq, rec);
            while let Some(rec) = pending.remove(&next) {
                if let Err(e) = coord.accept(&rec) {
                    stop.store(true, std::sync::atomic::Ordering::Relaxed);
                    return Err(e);
                }
                next += 1;
            }
        }
        debug_assert!(pending.is_empty());
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_stream_crosses_segments() {
        let lo = PrimeStream::SEGMENT - 100;
        let got: Vec<u64> = PrimeStream::new(lo, lo + 300).collect();
        assert_eq!(got, primes_in_range(lo, lo + 300));
        assert_eq!(PrimeStream::new(24, 28).count(), 0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut tally = ScanTally::default();
        tally.summary.primes = 12;
        tally.by_index = vec![9, 3];
        tally.rejections.insert("small-order".into(), 2);
        tally.last_p = Some(101);
        let c = Checkpoint {
            from: 5,
            to: 200,
            force: "auto".into(),
            results_len: 77,
            aux_len: 1234,
            tally,
        };
        assert_eq!(Checkpoint::parse(&c.render()), Some(c));
        assert_eq!(Checkpoint::parse("garbage"), None);
    }
}
