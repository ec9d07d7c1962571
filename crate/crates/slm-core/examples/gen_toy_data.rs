//! Regenerates the toy corpus under data/toy/ (checked into the
//! repository; run from the workspace root):
//!
//! ```text
//! cargo run -p slm-core --example gen_toy_data
//! ```

use std::fmt::Write as _;

use slm_core::eval::format_nbest;
use slm_core::synth;

fn main() -> std::io::Result<()> {
    let dir = std::path::Path::new("data/toy");
    std::fs::create_dir_all(dir)?;
    let lex = synth::travel_lexicon();

    let trees = synth::sample_treebank(&lex, 50, 1001);
    let mut parses = String::new();
    let mut train_text = String::new();
    for t in &trees {
        let _ = writeln!(parses, "{}", t.serialize());
        let _ = writeln!(train_text, "{}", synth::tree_words(t).join(" "));
    }
    std::fs::write(dir.join("parses.txt"), parses)?;
    std::fs::write(dir.join("train.txt"), train_text)?;

    let test_trees = synth::sample_treebank(&lex, 20, 2002);
    let mut test_text = String::new();
    for t in &test_trees {
        let _ = writeln!(test_text, "{}", synth::tree_words(t).join(" "));
    }
    std::fs::write(dir.join("test.txt"), test_text)?;

    let mut vocab = String::from("# toy vocabulary\n");
    for w in lex.words() {
        let _ = writeln!(vocab, "{w}");
    }
    std::fs::write(dir.join("vocab.txt"), vocab)?;

    std::fs::write(
        dir.join("headrules.txt"),
        "S ltr VP S NP\nNP rtl NN NP\nVP ltr VB VP\nPP ltr IN\n",
    )?;

    std::fs::write(dir.join("retok.tsv"), "don't\tdo n't\ncannot\tcan not\n")?;

    let nbest = synth::sample_nbest(&lex.words(), 20, 8, 3003);
    std::fs::write(dir.join("nbest.txt"), format_nbest(&nbest))?;

    println!("wrote data/toy/");
    Ok(())
}
