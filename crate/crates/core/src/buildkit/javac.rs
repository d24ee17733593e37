use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::{javac_args, shell_join, AdapterError, BuildPlan, CompilerAdapter, RawRun, DEFAULT_TIMEOUT};

/// Runs an installed `javac` directly, in the round workspace.
#[derive(Debug, Clone)]
pub struct JavacCompiler {
    program: PathBuf,
    timeout: Duration,
    /// `-extdirs` was removed from javac 9; older compilers need it to
    /// ignore installed extensions.
    supports_extdirs: bool,
}

fn find_on_path(name: &str) -> Option<PathBuf> {
    let exe = if cfg!(windows) { format!("{name}.exe") } else { name.to_owned() };
    if let Some(home) = std::env::var_os("JAVA_HOME") {
        let p = Path::new(&home).join("bin").join(&exe);
        if p.is_file() {
            return Some(p);
        }
    }
    std::env::split_paths(&std::env::var_os("PATH")?)
        .map(|dir| dir.join(&exe))
        .find(|p| p.is_file())
}

/// Parses `javac 1.8.0_292` / `javac 17.0.2` into a major version.
fn major_version(banner: &str) -> Option<u32> {
    let version = banner.split_whitespace().nth(1)?;
    let mut parts = version.split(['.', '_', '-']);
    let first: u32 = parts.next()?.parse().ok()?;
    if first == 1 {
        parts.next()?.parse().ok()
    } else {
        Some(first)
    }
}

impl JavacCompiler {
    /// Finds `javac` via `JAVA_HOME` or `PATH`.
    pub fn locate(timeout: Duration) -> Result<Self, AdapterError> {
        let program = find_on_path("javac").ok_or_else(|| AdapterError::Unavailable("javac not found on PATH or JAVA_HOME".into()))?;
        Self::with_program(program, timeout)
    }

    pub fn with_program(program: PathBuf, timeout: Duration) -> Result<Self, AdapterError> {
        let out = Command::new(&program)
            .arg("-version")
            .output()
            .map_err(|e| AdapterError::Unavailable(format!("{}: {e}", program.display())))?;
        let banner = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
        let major = major_version(banner.trim()).unwrap_or(9);
        Ok(JavacCompiler {
            program,
            timeout,
            supports_extdirs: major <= 8,
        })
    }

    pub fn is_available() -> bool {
        find_on_path("javac").is_some()
    }
}

impl Default for JavacCompiler {
    fn default() -> Self {
        JavacCompiler {
            program: PathBuf::from("javac"),
            timeout: DEFAULT_TIMEOUT,
            supports_extdirs: false,
        }
    }
}

fn drain<R: Read + Send + 'static>(r: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut r) = r {
            let _ = r.read_to_end(&mut buf);
        }
        buf
    })
}

impl CompilerAdapter for JavacCompiler {
    fn name(&self) -> &str {
        "javac"
    }

    fn run(&self, plan: &BuildPlan, _sources: &[PathBuf]) -> Result<RawRun, AdapterError> {
        let args = javac_args(plan, self.supports_extdirs);
        let program = self.program.to_string_lossy();
        let command = shell_join(std::iter::once(program.as_ref()).chain(args.iter().map(String::as_str)));

        let mut child = Command::new(&self.program)
            .args(&args)
            .current_dir(&plan.workspace)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| AdapterError::Unavailable(format!("{}: {e}", self.program.display())))?;
        let stdout = drain(child.stdout.take());
        let stderr = drain(child.stderr.take());

        let started = Instant::now();
        let (status, timed_out) = loop {
            match child.try_wait().map_err(|e| AdapterError::io("waiting for javac", e))? {
                Some(status) => break (Some(status), false),
                None if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break (None, true);
                }
                None => thread::sleep(Duration::from_millis(20)),
            }
        };
        let mut output = String::from_utf8_lossy(&stdout.join().unwrap_or_default()).into_owned();
        output.push_str(&String::from_utf8_lossy(&stderr.join().unwrap_or_default()));
        Ok(RawRun {
            command,
            exit_code: status.and_then(|s| s.code()),
            output,
            timed_out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_banners() {
        assert_eq!(major_version("javac 1.8.0_292"), Some(8));
        assert_eq!(major_version("javac 17.0.2"), Some(17));
        assert_eq!(major_version("javac 21"), Some(21));
        assert_eq!(major_version("garbage"), None);
    }

    #[cfg(unix)]
    #[test]
    fn timeout_kills_the_compiler() {
        let ws = tempfile::tempdir().unwrap();
        let script = ws.path().join("slow-javac");
        std::fs::write(&script, "#!/bin/sh\nexec sleep 5\n").unwrap();
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
        let adapter = JavacCompiler {
            program: script,
            timeout: Duration::from_millis(200),
            supports_extdirs: false,
        };
        let plan = BuildPlan::new("p", ws.path(), ws.path());
        let started = Instant::now();
        let run = adapter.run(&plan, &[]).unwrap();
        assert!(run.timed_out);
        assert!(started.elapsed() < Duration::from_secs(4));
    }
}
