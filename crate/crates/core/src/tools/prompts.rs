pub const IMG_SYSTEM_PROMPT: &str = "You are an expert in dealing with image in Physics Olympiads.";

pub const REVIEW_SYSTEM_PROMPT: &str = concat!(
    "You are an uncompromising Physics peer-reviewer. Your job is to find *every* logical, mathematical ",
    "error in the worker's answer. ",
    "Check dimensional consistency, missing steps, incorrect sign conventions, numerical mistakes, and ",
    "unclear explanations. Focus especially on wrong answers, less on presentations.",
    "Be extremely critical: if something is wrong, point it out and request clarification or correction. ",
    "Mainly focus on errors that would lead to a wrong result, rather than focusing extremely on presentation ",
    "or style.",
    "It is possible that the worker's answer is not correct, so please be prepared to provide detailed ",
    "feedback. The worker's answer contains some error, so you must check and point it out. Also, if the ",
    "worker reads measurements from image, make sure to remind the worker that whenever it reads or measures ",
    "from image, it uses the ask_image_expert tool, or the readings might be very inaccurate.\n",
);

/// The reviewer prompt with the sentence presuming an error replaced.
pub const NEUTRAL_REVIEW_SYSTEM_PROMPT: &str = concat!(
    "You are an uncompromising Physics peer-reviewer. Your job is to find *every* logical, mathematical ",
    "error in the worker's answer. ",
    "Check dimensional consistency, missing steps, incorrect sign conventions, numerical mistakes, and ",
    "unclear explanations. Focus especially on wrong answers, less on presentations.",
    "Be extremely critical: if something is wrong, point it out and request clarification or correction. ",
    "Mainly focus on errors that would lead to a wrong result, rather than focusing extremely on presentation ",
    "or style.",
    "It is possible that the worker's answer is not correct, so please be prepared to provide detailed ",
    "feedback. The worker's answer may contain errors, so you must check carefully and point out any you find. ",
    "Also, if the ",
    "worker reads measurements from image, make sure to remind the worker that whenever it reads or measures ",
    "from image, it uses the ask_image_expert tool, or the readings might be very inaccurate.\n",
);

pub fn review_instruction(solution: &str, note: &str) -> String {
    format!(
        "Please review the following solution:\n\n\
         WORKER'S SOLUTION:\n{solution}\n\n\
         WORKER'S NOTE: {note}\n\n\
         Please provide detailed feedback on correctness. \
         Point out any errors, wrong steps, focus more on correctness rather than presentation.\
         The original problem follows:"
    )
}

pub const SUMMARY_SYSTEM_PROMPT: &str =
    "You condense the working notes of a physics problem solver so that it can continue with less context.";

pub(crate) fn summary_instruction(trajectory: &str, max_chars: usize) -> String {
    format!(
        "Summarize the progress below in at most {max_chars} characters. \
         Keep every established result, derived formula and numerical value with its unit, \
         and list the sub-questions that are still pending. \
         Leave out verbatim tool outputs and abandoned attempts.\n\n\
         PROGRESS:\n{trajectory}"
    )
}
