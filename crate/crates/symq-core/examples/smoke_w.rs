use symq_core::expr::{VarCtx, VarRole};
use symq_core::parse::parse_expr;
use symq_core::quantize::{solve_determining, AnsatzOptions, PdeSymmetry};

fn main() {
    let mut ctx = VarCtx::new();
    let t = ctx.declare("t", VarRole::Independent).unwrap();
    let x = ctx.declare("x", VarRole::Dependent).unwrap();
    let e = |s: &str, ctx: &VarCtx| parse_expr(s, ctx).unwrap();
    let syms: Vec<PdeSymmetry> = [
        ("W1", "x*t", "x^2"),
        ("W2", "x", "0"),
        ("W3", "t^2", "x*t"),
        ("W4", "-t", "x"),
        ("W5", "0", "t"),
    ]
    .iter()
    .map(|(l, a, b)| PdeSymmetry::geometric(*l, e(a, &ctx), e(b, &ctx)))
    .collect();
    let start = std::time::Instant::now();
    let sols = solve_determining(
        &ctx,
        t,
        x,
        &syms,
        false,
        AnsatzOptions { degree: 2, allow_log: false },
    );
    println!("elapsed: {:?}", start.elapsed());
    match sols {
        Ok(sols) => {
            println!("{} solutions", sols.len());
            for s in &sols {
                println!("  PDE: {}", s.pde);
                for sym in &s.symmetries {
                    println!("    {}: lam = {}", sym.label, sym.lam);
                }
            }
        }
        Err(e) => println!("error: {}", e),
    }
}
