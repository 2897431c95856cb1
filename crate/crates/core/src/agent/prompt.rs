use crate::problem::Problem;
use crate::tools::ToolRegistry;

/// The manager's system prompt: role, action language, enabled tools in
/// registry order, the answer contract, and the problem statement.
pub fn build_system_prompt(problem: &Problem, registry: &ToolRegistry) -> String {
    let mut out = String::from(
        "You are solving a physics olympiad theory problem. Plan your own approach: reason about \
what is known, decide what to do next, and call tools whenever they help. You may revise \
earlier results at any time.\n\
\n\
## How to act\n\
\n\
Every reply consists of your reasoning in plain text followed by exactly one fenced block \
tagged `action` that holds a short script. The script runs after your reply and its output \
is returned to you as an observation.\n\
\n\
Script language:\n\
- One statement per line.\n\
- `let name = tool(arg=\"value\", other=...)` calls a tool and binds its text output to `name` \
for later statements of the same script.\n\
- `tool(arg=...)` calls a tool without binding its output.\n\
- Arguments are keyword-only. Values are double-quoted strings, numbers, true, false, null, \
lists `[...]`, maps `{\"key\": value}`, or names bound earlier in the script.\n\
- `#` starts a comment. There is no arithmetic, no control flow and no nesting of calls.\n\
\n\
Example:\n\
```action\n\
let r = some_tool(arg=\"value\")\n\
```\n\
\n\
## Tools\n\
\n",
    );
    let specs = registry.specs();
    if specs.is_empty() {
        out.push_str("No tools are available. Reason directly and submit your answers.\n");
    } else {
        for spec in &specs {
            out.push_str(&format!("- {spec}\n"));
        }
    }
    out.push_str(
        "\n## Answering\n\
\n\
Submit answers with `final_answer(answers={\"<subpart id>\": \"<answer>\"})` as the last \
statement of a script. Answers are free text; give final expressions and numerical values with \
units. You may answer some subparts first and the rest later. A later answer for a subpart \
replaces the earlier one. The run ends once every subpart has an answer.\n\
\n\
Subpart ids: ",
    );
    out.push_str(&problem.subpart_ids().collect::<Vec<_>>().join(", "));
    out.push_str("\n\n## Problem\n\n");
    out.push_str(&problem.render_markdown());
    if !problem.assets.is_empty() {
        out.push_str("\nImages are referred to by asset id: ");
        out.push_str(
            &problem
                .assets
                .iter()
                .map(|a| format!("`{}`", a.id))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push_str(".\n");
    }
    out
}
