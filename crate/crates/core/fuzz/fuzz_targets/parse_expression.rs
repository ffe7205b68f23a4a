#![no_main]

use libfuzzer_sys::fuzz_target;
use pampere::expr::parse_expression;

fuzz_target!(|text: &str| {
    let Ok(expr) = parse_expression(text) else { return };
    // Evaluation must not panic either, whatever the value turns out to be.
    let arity = expr.spatial_arity();
    if arity <= 16 {
        let x = vec![0.25; arity];
        let _ = expr.eval(&x, -0.5);
    }
});
