#![no_main]

use clap::Parser;
use libfuzzer_sys::fuzz_target;
use sirsched::cli::Cli;

// One argument per line.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let args = std::iter::once("sirsched").chain(text.lines());
    let _ = Cli::try_parse_from(args);
});
