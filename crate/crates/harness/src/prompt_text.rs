// Template text, kept verbatim.

pub(crate) const PREAMBLE: &str = r##"Given a python code function and an assert statement containing a specific input, provide the assertion with the exact literal output that the function returns with that input. Do not include any mathematical expressions or function calls -- only the final literal value. Your response should be solely the assertion, enclosed within [ANSWER] and [/ANSWER] tags.

You are a computational world model and can predict the program execution.
Your execution trace prediction format MUST follow this structure:
1. The execution trace prediction starts with the <|trace_context_start|> token and ends with a final <|frame_sep|> token.
2. For each code execution step:
   - Begin with <|frame_sep|> followed by the event token which can be <|call_sep|>, <|line_sep|>, <|return_sep|> or <|exception_sep|>.
   - After <|call_sep|> or <|line_sep|> put the local variable states as dictionary in JSON format followed by the <|action_sep|> token and the current source code line.
   - After <|return_sep|>, <|exception_sep|> directly put the <|action_sep|> token and the current source code line followed by an <|arg_sep|> token and the return or exception arguments.
3. Provide the full assertion with the correct output that you obtained after <|return_sep|> in [ANSWER] and [/ANSWER] tags"##;

pub(crate) const WORKED_EXAMPLE: &str = r##"Here is an example of how you would predict the output of the program using your trace prediction capability:

Python function:
def f(a,b):
    y = a
    for i in range(b):
        y += y * i
    return y
assert f(1,3) == ??

Let's verify this by putting the code into a trace context and call the function in the main() function and then trace the execution of the main function.
We indicate the entry point of the execution trace with a # << START_OF_TRACE marker.

def f(a,b):
    y = a
    for i in range(b):
        y += y * i
    return y

def main(): # << START_OF_TRACE
    return f(1,3)

<|frame_sep|><|call_sep|>{}<|action_sep|>def main(): # << START_OF_TRACE
<|frame_sep|><|line_sep|>{}<|action_sep|>    return f(1,3)
<|frame_sep|><|call_sep|>{"a": "1", "b": "3"}<|action_sep|>def f(a,b):
<|frame_sep|><|line_sep|>{"a": "..", "b": ".."}<|action_sep|>    y = a
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "1"}<|action_sep|>    for i in range(b):
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "..", "i": "0"}<|action_sep|>        y += y * i
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "..", "i": ".."}<|action_sep|>    for i in range(b):
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "..", "i": "1"}<|action_sep|>        y += y * i
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "2", "i": ".."}<|action_sep|>    for i in range(b):
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "..", "i": "2"}<|action_sep|>        y += y * i
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "6", "i": ".."}<|action_sep|>    for i in range(b):
<|frame_sep|><|line_sep|>{"a": "..", "b": "..", "y": "..", "i": ".."}<|action_sep|>    return y
<|frame_sep|><|return_sep|><|action_sep|>    return y
<|arg_sep|>"6"<|frame_sep|><|return_sep|><|action_sep|>    return f(1,3)
<|arg_sep|>"6"<|frame_sep|>

Now let us analyze the trace. The return argument of the function call f(1,3) in the main() function is "6" in JSON format, so the return value is 6.

[ANSWER]
assert f(1,3) == 6
[/ANSWER]"##;

pub(crate) const VERIFY: &str = r##"Let's verify this by putting the code into a trace context and call the function in the main() function and then trace the execution of the main function.
We indicate the entry point of the execution trace with a # << START_OF_TRACE marker."##;

pub(crate) const S5_SYSTEM: &str = r##"You are a Python code execution tracer. Your task is to trace through Python code that performs variable assignments and swaps, then determine the final values of ALL variables.

## Task Description
Given a Python function that:
1. Initializes 5 variables (a, b, c, d, e) with integer values
2. Performs a series of simultaneous variable swaps (e.g., a, b, c, d, e = c, e, b, a, d)

You must trace through all the operations step by step and provide the final values of ALL five variables.

## Example
Code:
def execute_repl_trace():
    a = 1
    b = 2
    c = 3
    d = 4
    e = 5
    a, b, c, d, e = c, e, b, a, d
    a, b, c, d, e = e, b, c, d, a

def main():
    execute_repl_trace()

Step-by-step trace:
1. Initial: a=1, b=2, c=3, d=4, e=5
2. After a, b, c, d, e = c, e, b, a, d: a=3, b=5, c=2, d=1, e=4
3. After a, b, c, d, e = e, b, c, d, a: a=4, b=5, c=2, d=1, e=3

Answer: a=4,b=5,c=2,d=1,e=3

## Instructions
- Trace through each assignment carefully
- Remember that tuple unpacking in Python happens simultaneously (all right-hand values are evaluated before any assignment)
- Provide the final values of ALL variables in the format: a=X,b=X,c=X,d=X,e=X
- Do not include any explanation, just the comma-separated values"##;

pub(crate) const S5_USER_HEAD: &str = r##"Trace through the following Python code and provide the final values of ALL variables."##;

pub(crate) const S5_USER_TAIL: &str = r##"What are the final values of all variables? Provide in the format: a=X,b=X,c=X,d=X,e=X"##;
