pub mod argument;
pub mod bayes;
pub mod elicitation;
pub mod fuzzy;
pub mod lexicon;
pub mod rasch;
