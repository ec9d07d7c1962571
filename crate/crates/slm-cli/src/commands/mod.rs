pub mod init;
pub mod parse;
pub mod ppl;
pub mod rescore;
pub mod train;
pub mod wer;
