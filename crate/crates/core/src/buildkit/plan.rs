use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::resolver::Encoding;

pub const BUILD_FILE: &str = "build.xml";
pub const PLAN_FILE: &str = "plan.txt";
pub const SOURCES_FILE: &str = "sources.txt";
pub const CLASSES_DIR: &str = "classes";
pub const EXT_DIR: &str = "ext-empty";

/// Everything needed to compile one project once.
///
/// `workspace` is the round directory that holds the build file, the class
/// output and the empty extensions directory. Paths inside it are rendered
/// relative to it, so two runs into different output roots render
/// identical build files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildPlan {
    pub project_id: String,
    pub source_root: PathBuf,
    pub workspace: PathBuf,
    pub classpath: Vec<PathBuf>,
    pub encoding: Option<Encoding>,
    /// Point the compiler's extension directory at an empty location.
    pub extensions_override: bool,
}

impl BuildPlan {
    pub fn new(project_id: impl Into<String>, source_root: impl Into<PathBuf>, workspace: impl Into<PathBuf>) -> Self {
        BuildPlan {
            project_id: project_id.into(),
            source_root: source_root.into(),
            workspace: workspace.into(),
            classpath: Vec::new(),
            encoding: None,
            extensions_override: true,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.workspace.join(CLASSES_DIR)
    }

    pub fn ext_dir(&self) -> PathBuf {
        self.workspace.join(EXT_DIR)
    }

    pub fn sources_list(&self) -> PathBuf {
        self.workspace.join(SOURCES_FILE)
    }

    /// `path` relative to the workspace when inside it.
    pub fn display_path(&self, path: &Path) -> String {
        let shown = path.strip_prefix(&self.workspace).unwrap_or(path);
        let s = shown.to_string_lossy().replace('\\', "/");
        if s.is_empty() {
            ".".to_owned()
        } else {
            s
        }
    }
}

fn xml_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Ant build file compiling every `.java` file below the source root.
pub fn render_build_file(plan: &BuildPlan) -> String {
    let mut x = String::new();
    let _ = writeln!(x, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(x, r#"<project name="{}" default="compile" basedir=".">"#, xml_attr(&plan.project_id));
    let _ = writeln!(x, r#"  <target name="compile">"#);
    let out = xml_attr(&plan.display_path(&plan.output_dir()));
    let _ = writeln!(x, r#"    <mkdir dir="{out}" />"#);
    if plan.extensions_override {
        let _ = writeln!(x, r#"    <mkdir dir="{}" />"#, xml_attr(&plan.display_path(&plan.ext_dir())));
    }
    let _ = write!(
        x,
        r#"    <javac srcdir="{}" destdir="{out}" includes="**/*.java" includeantruntime="false""#,
        xml_attr(&plan.display_path(&plan.source_root)),
    );
    if plan.extensions_override {
        let _ = write!(x, r#" extdirs="{}""#, xml_attr(&plan.display_path(&plan.ext_dir())));
    }
    if let Some(enc) = plan.encoding {
        let _ = write!(x, r#" encoding="{enc}""#);
    }
    if plan.classpath.is_empty() {
        let _ = writeln!(x, " />");
    } else {
        let _ = writeln!(x, ">");
        let _ = writeln!(x, "      <classpath>");
        for cp in &plan.classpath {
            let _ = writeln!(x, r#"        <pathelement path="{}" />"#, xml_attr(&plan.display_path(cp)));
        }
        let _ = writeln!(x, "      </classpath>");
        let _ = writeln!(x, "    </javac>");
    }
    let _ = writeln!(x, "  </target>");
    let _ = writeln!(x, "</project>");
    x
}

/// Key-value form of a plan: `project=`, `src=`, `out=`, `encoding=`, `cp=`...
pub fn render_plan_manifest(plan: &BuildPlan) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "project={}", plan.project_id);
    let _ = writeln!(s, "src={}", plan.display_path(&plan.source_root));
    let _ = writeln!(s, "out={}", plan.display_path(&plan.output_dir()));
    let _ = writeln!(s, "encoding={}", plan.encoding.map(|e| e.as_str()).unwrap_or(""));
    for cp in &plan.classpath {
        let _ = writeln!(s, "cp={}", plan.display_path(cp));
    }
    s
}

#[derive(Debug, thiserror::Error)]
#[error("plan line {line}: {message}")]
pub struct PlanError {
    pub line: usize,
    pub message: String,
}

/// Reads a plan manifest back; relative paths resolve against `workspace`.
pub fn parse_plan_manifest(text: &str, workspace: &Path) -> Result<BuildPlan, PlanError> {
    let mut plan = BuildPlan::new("", "", workspace);
    let resolve = |v: &str| {
        let p = Path::new(v);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            workspace.join(p)
        }
    };
    let (mut seen_project, mut seen_src) = (false, false);
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| PlanError { line: i + 1, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
        match key {
            "project" => {
                plan.project_id = value.to_owned();
                seen_project = true;
            }
            "src" => {
                plan.source_root = resolve(value);
                seen_src = true;
            }
            "out" => {
                if resolve(value) != plan.output_dir() {
                    return Err(err(format!("output `{value}` is not the workspace class directory")));
                }
            }
            "encoding" if value.is_empty() => plan.encoding = None,
            "encoding" => plan.encoding = Some(value.parse().map_err(err)?),
            "cp" => plan.classpath.push(resolve(value)),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    if !seen_project || !seen_src {
        return Err(PlanError {
            line: 0,
            message: "plan lacks project= or src=".into(),
        });
    }
    Ok(plan)
}
