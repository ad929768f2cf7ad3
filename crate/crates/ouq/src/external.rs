//! Models implemented by an external command.
//!
//! The child process receives one evaluation request per line on standard
//! input (space-separated decimal floats) and answers each with one decimal
//! float per line on standard output. Children are kept alive between
//! batches so process start-up is paid once per worker.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use ouq_core::{EvalCost, Model, ModelError};

struct Worker {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl Worker {
    fn spawn(argv: &[String]) -> std::io::Result<Self> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self { child, stdin, stdout })
    }

    fn exit_description(&mut self) -> String {
        self.stdin.take();
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) if status.success() => {
                    return "model process exited before answering".into()
                }
                Ok(Some(status)) => return format!("model process failed with {status}"),
                Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(10)),
                Ok(None) => return "model process closed its output".into(),
                Err(e) => return format!("cannot query model process: {e}"),
            }
        }
    }

    fn evaluate(&mut self, x: &[f64], line: &mut String) -> Result<f64, ModelError> {
        line.clear();
        for (i, v) in x.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        let stdin = self.stdin.as_mut().expect("stdin open while worker is live");
        if stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()).is_err() {
            return Err(ModelError::new(x, self.exit_description()));
        }
        line.clear();
        match self.stdout.read_line(line) {
            Ok(0) => Err(ModelError::new(x, self.exit_description())),
            Ok(_) => {
                let text = line.trim();
                match text.parse::<f64>() {
                    Ok(v) if !v.is_nan() => Ok(v),
                    _ => Err(ModelError::new(x, format!("malformed model output {text:?}"))),
                }
            }
            Err(e) => Err(ModelError::new(x, format!("cannot read model output: {e}"))),
        }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.stdin.take();
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct Pool {
    idle: Vec<Worker>,
    live: usize,
}

/// A model backed by an external command. A serial model runs one child
/// and evaluates batches one at a time; a concurrent model keeps up to
/// `workers` children.
pub struct CommandModel {
    argv: Vec<String>,
    dim: usize,
    workers: usize,
    pool: Mutex<Pool>,
    returned: Condvar,
}

impl CommandModel {
    pub fn serial(argv: Vec<String>, dim: usize) -> Self {
        Self::with_workers(argv, dim, 1)
    }

    pub fn concurrent(argv: Vec<String>, dim: usize, workers: usize) -> Self {
        Self::with_workers(argv, dim, workers.max(1))
    }

    fn with_workers(argv: Vec<String>, dim: usize, workers: usize) -> Self {
        assert!(!argv.is_empty(), "command must not be empty");
        Self {
            argv,
            dim,
            workers,
            pool: Mutex::new(Pool { idle: Vec::new(), live: 0 }),
            returned: Condvar::new(),
        }
    }

    pub fn argv(&self) -> &[String] {
        &self.argv
    }

    fn acquire(&self, first: &[f64]) -> Result<Worker, ModelError> {
        let mut pool = self.pool.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if let Some(w) = pool.idle.pop() {
                return Ok(w);
            }
            if pool.live < self.workers {
                pool.live += 1;
                drop(pool);
                return Worker::spawn(&self.argv).map_err(|e| {
                    self.retire();
                    ModelError::new(first, format!("cannot start model command {:?}: {e}", self.argv[0]))
                });
            }
            pool = self.returned.wait(pool).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn release(&self, worker: Worker) {
        self.pool.lock().unwrap_or_else(|e| e.into_inner()).idle.push(worker);
        self.returned.notify_one();
    }

    fn retire(&self) {
        self.pool.lock().unwrap_or_else(|e| e.into_inner()).live -= 1;
        self.returned.notify_one();
    }
}

impl Model for CommandModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        let mut out = Vec::with_capacity(1);
        self.evaluate_batch(x, &mut out)?;
        Ok(out[0])
    }

    fn evaluate_batch(&self, points: &[f64], out: &mut Vec<f64>) -> Result<(), ModelError> {
        let dim = self.dim.max(1);
        if points.is_empty() {
            return Ok(());
        }
        let mut worker = self.acquire(&points[..dim.min(points.len())])?;
        let mut line = String::new();
        for x in points.chunks_exact(dim) {
            match worker.evaluate(x, &mut line) {
                Ok(v) => out.push(v),
                Err(e) => {
                    drop(worker);
                    self.retire();
                    return Err(e);
                }
            }
        }
        self.release(worker);
        Ok(())
    }

    fn cost(&self) -> EvalCost {
        EvalCost::Expensive
    }

    fn is_concurrent(&self) -> bool {
        self.workers > 1
    }
}
