#![no_main]

use libfuzzer_sys::fuzz_target;
use pampere::config::parse_config;

fuzz_target!(|text: &str| {
    let _ = parse_config(text);
});
