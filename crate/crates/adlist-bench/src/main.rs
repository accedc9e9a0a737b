use adlist_bench::config::Cli;
use adlist_bench::csvout::emit_csv;
use adlist_bench::workload::run_config;
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("bench: config error: {msg}");
            return ExitCode::from(1);
        }
    };
    let groups = run_config(&cfg);
    for g in &groups {
        let s = g.summary();
        eprintln!(
            "{} {} threads={} dummies={} repeats={} mean={:.6}s ci99=±{:.6}s",
            g.workload,
            g.impl_name,
            g.threads,
            g.dummy_count,
            g.seconds.len(),
            s.mean,
            s.ci99_halfwidth
        );
    }
    if let Err(e) = emit_csv(&cfg.out, &groups) {
        eprintln!("bench: cannot write {}: {e}", cfg.out.display());
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
