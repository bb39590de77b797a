use std::collections::BTreeSet;
use std::fmt::Write;

use crashcast::eval::MetricsReport;

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn opt(v: Option<f64>, scale: f64, digits: usize) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{:.*}", digits, x * scale))
}

/// Markdown tables: the main comparison, visibility strata, and APA per TTC.
pub fn render(reports: &[MetricsReport]) -> String {
    let mut s = String::new();
    s.push_str("| config | horizon | noise (m) | latency (s) | windows | mIOU | VPQ | APA | id err | pos err | time err | mAP |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in reports {
        let tp = &r.accident.tp;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.config,
            r.horizon,
            r.noise,
            r.latency,
            r.windows,
            pct(r.motion.miou),
            pct(r.motion.vpq),
            pct(r.accident.apa),
            opt(tp.id_error, 1.0, 3),
            opt(tp.position_error, 1.0, 2),
            opt(tp.time_error, 1.0, 2),
            pct(r.detection.map),
        );
    }

    s.push_str("\n| config | horizon | visible windows | visible APA | invisible windows | invisible APA |\n");
    s.push_str("|---|---|---|---|---|---|\n");
    for r in reports {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            r.config,
            r.horizon,
            r.visible.windows,
            opt(r.visible.apa, 100.0, 1),
            r.invisible.windows,
            opt(r.invisible.apa, 100.0, 1),
        );
    }

    let bins: BTreeSet<u32> = reports.iter().flat_map(|r| r.ttc.iter().map(|t| t.ttc)).collect();
    s.push_str("\n| config | horizon |");
    for b in &bins {
        let _ = write!(s, " TTC {b}s |");
    }
    s.push_str("\n|---|---|");
    for _ in &bins {
        s.push_str("---|");
    }
    s.push('\n');
    for r in reports {
        let _ = write!(s, "| {} | {} |", r.config, r.horizon);
        for b in &bins {
            let apa = r.ttc.iter().find(|t| t.ttc == *b).and_then(|t| t.stratum.apa);
            let _ = write!(s, " {} |", opt(apa, 100.0, 1));
        }
        s.push('\n');
    }
    s
}
