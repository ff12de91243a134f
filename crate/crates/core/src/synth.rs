// SPDX-License-Identifier: Apache-2.0

//! Generated benchmark circuits with structurally graded derating.
//!
//! [`chain_netlist`] builds `chains` shift chains of `depth` flip-flops.
//! Stage `k` of every chain is gated by `g_k = OR(m_k_a, m_k_b)`, one gate
//! shared across chains, so an upset advances one stage with probability
//! 3/4 under uniform random inputs. Chain ends meet in an XOR tree that
//! drives the single output. A flip-flop's derating therefore falls off
//! geometrically with its distance from the chain end.

use std::fmt::Write as _;

fn ff(chain: usize, stage: usize) -> String {
    format!("c{chain:02}_s{stage:02}")
}

/// Structural Verilog for the chain benchmark; uses the bundled library.
pub fn chain_netlist(chains: usize, depth: usize) -> String {
    assert!(chains >= 1 && depth >= 1);
    let mut inputs = vec!["clk".to_string()];
    inputs.extend((0..chains).map(|c| format!("din{c:02}")));
    for k in 1..depth {
        inputs.push(format!("m{k:02}_a"));
        inputs.push(format!("m{k:02}_b"));
    }

    let mut body = String::new();
    for k in 1..depth {
        let _ = writeln!(body, "  OR2 g{k:02} (.A(m{k:02}_a), .B(m{k:02}_b), .Y(pass{k:02}));");
    }
    for c in 0..chains {
        for k in 0..depth {
            let d = if k == 0 {
                format!("din{c:02}")
            } else {
                let _ = writeln!(
                    body,
                    "  AND2 a{c:02}_{k:02} (.A(q{c:02}_{p:02}), .B(pass{k:02}), .Y(d{c:02}_{k:02}));",
                    p = k - 1
                );
                format!("d{c:02}_{k:02}")
            };
            let _ = writeln!(body, "  DFF {} (.D({d}), .CK(clk), .Q(q{c:02}_{k:02}));", ff(c, k));
        }
    }

    // Balanced XOR reduction of the chain ends.
    let mut level: Vec<String> = (0..chains).map(|c| format!("q{c:02}_{:02}", depth - 1)).collect();
    let mut count = 0;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            if let [a, b] = pair {
                let y = format!("x{count:03}");
                let _ = writeln!(body, "  XOR2 t{count:03} (.A({a}), .B({b}), .Y({y}));");
                count += 1;
                next.push(y);
            } else {
                next.push(pair[0].clone());
            }
        }
        level = next;
    }
    let _ = writeln!(body, "  BUF obuf (.A({}), .Y(out));", level[0]);

    let mut src = String::new();
    let _ = writeln!(src, "// Generated: {chains} gated shift chains of depth {depth}.");
    let _ = writeln!(src, "module chains_{chains}x{depth} ({}, out);", inputs.join(", "));
    let _ = writeln!(src, "  input {};", inputs.join(", "));
    let _ = writeln!(src, "  output out;");
    src.push_str(&body);
    src.push_str("endmodule\n");
    src
}
