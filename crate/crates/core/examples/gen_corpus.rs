//! Regenerate a corpus file: `cargo run --example gen_corpus -- <out> <count> <seed>`

use molforge_core::chem::gen::generate_corpus_sized;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 4 {
        eprintln!("usage: gen_corpus <out-path> <count> <seed>");
        std::process::exit(2);
    }
    let count: usize = args[2].parse().expect("count");
    let seed: u64 = args[3].parse().expect("seed");
    let lines = generate_corpus_sized(count, seed, 14);
    let mut text = format!("# generated corpus: {count} molecules, seed {seed}\n");
    text.push_str(&lines.join("\n"));
    text.push('\n');
    std::fs::write(&args[1], text).expect("write corpus");
    println!("wrote {} lines to {}", count, args[1]);
}
