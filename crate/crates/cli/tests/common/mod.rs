#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, ExitStatus, Output, Stdio};

pub fn vdtp() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vdtp"));
    cmd.env_remove("VDTP_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    vdtp().args(args).output().expect("spawn vdtp")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// A `vdtp serve` child bound to an ephemeral loopback port.
pub struct Server {
    child: Option<Child>,
    pub addr: String,
}

impl Server {
    pub fn start(root: &Path, config: &str) -> Server {
        let mut child = vdtp()
            .args([
                "serve",
                "--bind",
                "127.0.0.1:0",
                "--config",
                config,
                "--root",
            ])
            .arg(root)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn vdtp serve");
        let mut line = String::new();
        BufReader::new(child.stdout.take().expect("piped stdout"))
            .read_line(&mut line)
            .expect("read ready line");
        let addr = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected ready line {line:?}"))
            .to_string();
        Server {
            child: Some(child),
            addr,
        }
    }

    /// Sends SIGINT and waits for the process to exit.
    pub fn interrupt(mut self) -> ExitStatus {
        let mut child = self.child.take().expect("running");
        let ok = Command::new("kill")
            .args(["-INT", &child.id().to_string()])
            .status()
            .expect("run kill");
        assert!(ok.success());
        child.wait().expect("wait for serve")
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Deterministic pseudo-random file content.
pub fn content(len: usize, seed: u64) -> Vec<u8> {
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..len)
        .map(|_| {
            // xorshift64
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 32) as u8
        })
        .collect()
}
