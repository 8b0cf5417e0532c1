fn main() {
    let target = std::env::var("TARGET").unwrap_or_default();
    let profile = std::env::var("PROFILE").unwrap_or_default();
    let features = if std::env::var_os("CARGO_FEATURE_PARALLEL").is_some() { "parallel" } else { "sequential" };
    println!("cargo:rustc-env=SDS_BUILD_INFO={target} {profile} {features}");
}
