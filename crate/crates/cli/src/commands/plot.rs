//! `plot`: a self-contained plotting script plus normalized data files.
//!
//! No images are rendered here; the emitted script (matplotlib) references
//! only the data files written next to it, so figures stay reproducible.

use std::path::{Path, PathBuf};

use proxskip_core::error::{Error, Result};
use proxskip_core::solver::RunTrace;

use crate::commands::write_file;
use crate::exit_codes;

const SWEEP_HEADER: &str = "delta,ratio_theory,ratio_empirical,status";

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
enum InputKind {
    Trace,
    Sweep,
}

struct PlotInput {
    file_name: String,
    label: String,
    kind: InputKind,
}

fn classify(path: &Path, text: &str) -> Result<(InputKind, String)> {
    let mut label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    let mut header = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                if k.trim() == "estimator" {
                    label = v.trim().to_string();
                }
                if k.trim() == "tau" {
                    label = format!("{label} tau={}", v.trim());
                }
            }
            continue;
        }
        header = Some((i + 1, line.trim().to_string()));
        break;
    }
    let (line, header) = header.ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("{}: no header line found", path.display()),
    })?;
    if header == RunTrace::CSV_HEADER {
        Ok((InputKind::Trace, label))
    } else if header == SWEEP_HEADER {
        Ok((InputKind::Sweep, label))
    } else {
        Err(Error::Parse {
            line,
            message: format!(
                "{}: unrecognized columns `{header}` (expected a run trace or a delta sweep)",
                path.display()
            ),
        })
    }
}

pub fn cmd_plot(inputs: &[PathBuf], out: &Path) -> Result<i32> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("plot needs at least one CSV".into()));
    }
    let mut entries = Vec::new();
    for (i, path) in inputs.iter().enumerate() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let (kind, label) = classify(path, &text)?;
        let file_name = format!("plot_data_{i:02}.csv");
        write_file(&out.join(&file_name), &text)?;
        entries.push(PlotInput {
            file_name,
            label,
            kind,
        });
    }
    write_file(&out.join("plot.py"), &render_script(&entries))?;
    println!(
        "plot: script and {} data file(s) in {}",
        entries.len(),
        out.display()
    );
    Ok(exit_codes::SUCCESS)
}

fn render_script(entries: &[PlotInput]) -> String {
    let mut s = String::new();
    s.push_str("#!/usr/bin/env python3\n");
    s.push_str("\"\"\"Generated plotting script; reads only the data files beside it.\"\"\"\n");
    s.push_str("import csv\nimport os\n\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    s.push_str("HERE = os.path.dirname(os.path.abspath(__file__))\n\n");
    s.push_str(
        "def read(name):\n    rows = []\n    with open(os.path.join(HERE, name)) as fh:\n        for line in fh:\n            if line.startswith(\"#\") or not line.strip():\n                continue\n            rows.append(line.strip())\n    header = rows[0].split(\",\")\n    out = {h: [] for h in header}\n    for row in csv.reader(rows[1:]):\n        for h, v in zip(header, row):\n            out[h].append(v)\n    return out\n\n",
    );

    let traces: Vec<&PlotInput> = entries.iter().filter(|e| e.kind == InputKind::Trace).collect();
    let sweeps: Vec<&PlotInput> = entries.iter().filter(|e| e.kind == InputKind::Sweep).collect();

    if !traces.is_empty() {
        s.push_str("fig, ax = plt.subplots(figsize=(6, 4.5))\n");
        for t in &traces {
            s.push_str(&format!(
                "d = read(\"{}\")\nax.plot([float(v) for v in d[\"comms\"]], [float(v) for v in d[\"psi\"]], label=\"{}\")\n",
                t.file_name, t.label
            ));
        }
        s.push_str(
            "ax.set_yscale(\"log\")\nax.set_xlabel(\"communication rounds\")\nax.set_ylabel(\"Lyapunov value\")\nax.legend()\nax.grid(True, alpha=0.3)\nfig.tight_layout()\nfig.savefig(os.path.join(HERE, \"convergence.png\"), dpi=150)\n\n",
        );
    }
    if !sweeps.is_empty() {
        s.push_str("fig, ax = plt.subplots(figsize=(6, 4.5))\n");
        for t in &sweeps {
            s.push_str(&format!(
                "d = read(\"{}\")\nxs = [float(v) for v in d[\"delta\"]]\nax.plot(xs, [float(v) for v in d[\"ratio_theory\"]], label=\"{} theory\")\nax.plot(xs, [float(v) for v in d[\"ratio_empirical\"]], linestyle=\"--\", label=\"{} measured\")\n",
                t.file_name, t.label, t.label
            ));
        }
        s.push_str(
            "ax.axhline(1.0, color=\"red\", linestyle=\"dashed\", linewidth=1)\nax.set_xscale(\"log\")\nax.set_xlabel(\"per-sample compute cost\")\nax.set_ylabel(\"total-cost ratio\")\nax.legend()\nax.grid(True, alpha=0.3)\nfig.tight_layout()\nfig.savefig(os.path.join(HERE, \"cost_ratio.png\"), dpi=150)\n",
        );
    }
    s
}
