fn main() {
    println!("vem-sad");
}
