use std::io::Write;

// Terms are recursive values; deep sequential nesting needs a larger stack
// than the main thread gets by default.
const STACK_BYTES: usize = 512 << 20;

fn main() {
    let args: Vec<_> = std::env::args_os().collect();
    let o = std::thread::Builder::new()
        .stack_size(STACK_BYTES)
        .spawn(move || prsmc_core::cli::run(args))
        .expect("spawn worker thread")
        .join()
        .unwrap_or_else(|_| std::process::exit(101));
    print!("{}", o.stdout);
    eprint!("{}", o.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(o.code);
}
