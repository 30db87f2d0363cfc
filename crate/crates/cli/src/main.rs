use clap::Parser;

use equilearn_cli::{commands, Cli, Command};

fn init_thread_pool() {
    if let Ok(value) = std::env::var("EQUILEARN_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid EQUILEARN_THREADS={value}"),
        }
    }
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunDynamics(args) => commands::cmd_run_dynamics(args),
        Command::CheckEq(args) => commands::cmd_check_eq(args),
        Command::Reduction(args) => commands::cmd_reduction(args),
        Command::AppendixA(args) => commands::cmd_demo(args.n),
        Command::Bench => commands::cmd_bench(),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
