//! CPLEX LP text export, readable by HiGHS, CPLEX, Gurobi, GLPK and CBC.

use std::io::{self, Write};

use super::LinearProgram;

fn sanitize(name: &str) -> String {
    const EXTRA: &str = "!\"#$%&()/,.;?@_`'{}|~";
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || EXTRA.contains(c) { c } else { '_' })
        .collect();
    if out.chars().next().map_or(true, |c| c.is_ascii_digit() || c == '.') {
        out.insert(0, '_');
    }
    out
}

fn term(out: &mut String, coef: f64, var: &str, first: bool) {
    if coef < 0.0 {
        out.push_str(" - ");
    } else if !first {
        out.push_str(" + ");
    } else {
        out.push(' ');
    }
    out.push_str(&format!("{} {}", coef.abs(), var));
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Writes `lp` in CPLEX LP format. Names are sanitized; row names are
/// prefixed `e_`/`l_` to keep them unique across the two row families.
pub fn write_lp_format<W: Write>(lp: &LinearProgram, mut w: W) -> io::Result<()> {
    let vars: Vec<String> = lp.names().iter().map(|n| sanitize(n)).collect();
    writeln!(w, "\\ exported by coopt")?;
    writeln!(w, "Minimize")?;
    let mut obj = String::from(" obj:");
    let mut first = true;
    for (j, &c) in lp.cost().iter().enumerate() {
        if c != 0.0 {
            term(&mut obj, c, &vars[j], first);
            first = false;
        }
    }
    if first {
        obj.push_str(" 0");
    }
    writeln!(w, "{obj}")?;
    writeln!(w, "Subject To")?;
    for (prefix, sense, rows) in [("e_", "=", lp.equalities()), ("l_", "<=", lp.inequalities())] {
        for row in rows {
            let mut line = format!(" {}{}:", prefix, sanitize(&row.name));
            let mut first = true;
            for &(j, a) in &row.coeffs {
                term(&mut line, a, &vars[j], first);
                first = false;
            }
            if first {
                line.push_str(&format!(" 0 {}", vars.first().map_or("x", String::as_str)));
            }
            writeln!(w, "{line} {sense} {}", row.rhs)?;
        }
    }
    writeln!(w, "Bounds")?;
    for (j, name) in vars.iter().enumerate() {
        let (l, u) = (lp.lower()[j], lp.upper()[j]);
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            writeln!(w, " {name} free")?;
        } else if l == u {
            writeln!(w, " {name} = {l}")?;
        } else {
            writeln!(w, " {} <= {name} <= {}", bound(l), bound(u))?;
        }
    }
    writeln!(w, "End")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_all_sections() {
        let mut lp = LinearProgram::new();
        let g = lp.add_variable("g[G1,t1]", 10.0, f64::NEG_INFINITY, f64::INFINITY);
        let r = lp.add_variable("r_up[G1,t1]", 1.0, 0.0, 20.0);
        lp.add_equality("balance[t1]", vec![(g, 1.0)], 50.0);
        lp.add_inequality("cap[G1,t1]", vec![(g, 1.0), (r, 1.0)], 100.0);
        let mut buf = Vec::new();
        write_lp_format(&lp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("Minimize\n obj: 10 g_G1,t1_ + 1 r_up_G1,t1_"));
        assert!(text.contains(" e_balance_t1_: 1 g_G1,t1_ = 50"));
        assert!(text.contains(" l_cap_G1,t1_: 1 g_G1,t1_ + 1 r_up_G1,t1_ <= 100"));
        assert!(text.contains(" g_G1,t1_ free"));
        assert!(text.contains(" 0 <= r_up_G1,t1_ <= 20"));
        assert!(text.ends_with("End\n"));
    }
}
