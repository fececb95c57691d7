fn main() { println!("symq (under construction)"); }
