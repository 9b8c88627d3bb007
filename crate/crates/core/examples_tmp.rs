fn main(){ let a=std::f64::consts::FRAC_1_SQRT_2; println!("{:.17} {:.17}", 1.0-statrs::function::erf::erf(a), statrs::function::erf::erfc(a)); let e=statrs::function::erf::erf(a); println!("{:.17}", e - 2.0/std::f64::consts::PI.sqrt()*a*(-a*a).exp());}
