"""Prompt templates for failure-pattern generation and match rating.

Placeholders are filled with str.format; literal braces in JSON examples
are doubled. Instance texts are inserted raw (no normalization).
"""

DIRECT_COUNTED = """\
I am a user of an AI system. My goal is to figure out what types of questions the AI model is more likely to fail on and teach these principles to other users of the system.
In other words, I want to discover what specific features of the text distinguish the questions where AI is correct from the questions where AI is wrong.
Given a list of instances where an AI was incorrect, please generate the {num_hyps} most salient hypotheses which describe instances where AI is more likely to be wrong.
Format the response as a json object.
For example, here is how the output would be formatted for 3 generated hypotheses.
{{"hypothesis0": "requires addition with two-digit numbers",
"hypothesis1": "contains negation words in the question",
"hypothesis2": "involves computing an integral as an intermediary step"}}

There are {num_hyps} salient error types, so you should generate {num_hyps} hypotheses.
The description(s) should be concise, understandable to humans, and describe as many of the wrong instances as possible. Ideally, the list would cover all of the datapoints. Avoid using subjective or vague language such as "complex" or "ambiguous" and focus on specific characteristics. If there are no distinctive properties then list "None" as the entry.

Error Instances:
***
{error_instances}
***

Based on the error instances from the above, the model is likely to make an error when a question
"""

DIRECT_UNSPECIFIED = """\
I am a user of an AI system. My goal is to figure out what types of questions the AI model is more likely to fail on and teach these principles to other users of the system.
In other words, I want to discover what specific features of the text distinguish the questions where AI is correct from the questions where AI is wrong.
Given a list of instances where an AI was incorrect, please generate the most salient hypotheses which describe instances where AI is more likely to be wrong.
Format the response as a json object.
For example, here is how the output would be formatted for 3 generated hypotheses.
{{"hypothesis0": "requires addition with two-digit numbers",
"hypothesis1": "contains negation words in the question",
"hypothesis2": "involves computing an integral as an intermediary step"}}

You should generate as many hypotheses as you deem fit to cover the most salient error types.
The description(s) should be concise, understandable to humans, and describe as many of the wrong instances as possible. Ideally, the list would cover all of the datapoints. Avoid using subjective or vague language such as "complex" or "ambiguous" and focus on specific characteristics. If there are no distinctive properties then list "None" as the entry.

Error Instances:
***
{error_instances}
***

Based on the error instances from the above, the model is likely to make an error when a question
"""

CONTRASTIVE = """\
Group A:
{error_instances}

Group B:
{correct_instances}

The dataset includes {domain_description}. The two groups are generated based on whether the AI answered correctly or not. The Group A snippets are questions where the AI system was wrong, while the Group B snippets are questions where the AI system was correct.

I am user of this AI system. My goal is to figure out what types of questions the AI model is more likely to fail on and teach these principles to other users of the system.
In other words, I want to discover what specific features of the text distinguish the questions where AI is correct from the questions where AI is wrong.

Please write a list of the most salient hypotheses about the datapoints from Group A (listed by bullet points "-"). Each hypothesis should be formatted as a sentence fragment. Here are three examples.
- "requires addition with two-digit numbers"
- "contains negation words in the question"
- "involves computing an integral as an intermediary step"

Based on the two sentence groups (A and B) from the above, more sentences in Group A
"""

DEFAULT_DOMAIN_DESCRIPTION = "questions from an evaluation dataset"

VALIDATOR = """\
A hypothesis about a group of questions is given below, followed by one question.
Decide whether the hypothesis applies to this question.

Hypothesis: {hypothesis}

Question:
***
{instance}
***

Answer with a single word: "yes" if the hypothesis applies to this question, "no" otherwise.
"""

REGION_DESCRIBE = """\
The following questions were grouped together because an AI system handles them similarly.
Write one concise description of what the questions in this group have in common, formatted as a sentence fragment (for example "requires addition with two-digit numbers").
Avoid using subjective or vague language such as "complex" or "ambiguous" and focus on specific characteristics.
Format the response as a json object, for example {{"description": "requires addition with two-digit numbers"}}.

Group questions:
***
{region_instances}
***
"""

REGION_REFINE = """\
A group of questions was described as:
"{description}"

The following questions are NOT part of the group, but they resemble the description:
***
{counterexamples}
***

Rewrite the description so it still covers the group's questions but no longer matches the questions above. Keep it a concise sentence fragment.
Format the response as a json object, for example {{"description": "requires addition with two-digit numbers"}}.
"""

JUDGE_OUTPUT_SPEC = """\
Structure your entire output in JSON format as follows:
{
    'Additional Comments': [comments],
    'Final Rating': [verdict]
}
where "verdict" must be 1, 2, 3, 4, or 5 nothing else.
"""

JUDGE_MATHCAMPS = """\
# Instructions for Evaluating Math Problem Description Similarity

When evaluating how closely a submitted description matches the reference description, consider both the core mathematical concepts and the specific details mentioned.

## Rating Scale
1. **Perfect Match (5/5)**: Description captures all key mathematical concepts and specific details from the reference.
2. **Strong Match (4/5)**: Description captures the main mathematical concepts but may miss minor details.
3. **Moderate Match (3/5)**: Description captures some key concepts but misses significant details or uses imprecise terminology.
4. **Weak Match (2/5)**: Description only vaguely relates to the reference, missing most key concepts.
5. **No Match (1/5)**: Description fails to capture any relevant mathematical concepts from the reference.

## Evaluation Process
1. Identify the core mathematical concepts in the reference description (both long and short versions)
2. Determine which specific details or applications are essential
3. Compare the submitted description against these elements
4. Assign a rating based on how completely the core concepts and essential details are captured

## Example Evaluation
**Reference (Long)**: "Solve real-world and mathematical problems involving the four operations with rational numbers."
**Reference (Short)**: "Add/sub/mult/div with fractions"

**Core Concepts**:
- Arithmetic operations (addition, subtraction, multiplication, division)
- Fractions/rational numbers

**Rating Examples**:
- **Perfect (5/5)**: "Problems with the four arithmetic operations with fractions to solve problems."
- **Strong (4/5)**: "Problems with fractions using different operations to solve math problems."
- **Moderate (3/5)**: "Solving problems with fractions" (missing specific mention of operations)
- **Weak (2/5)**: "Working with number operations" (mentions operations but not fractions)
- **No Match (1/5)**: "Solving geometry problems" (unrelated mathematical domain)

When judging, remember to look for both the mathematical content (operations, number types, etc.) and number types and ranges (whole numbers, fractions, decimals, etc.).

{output_spec}
Group description: {submission}

Reference detailed description: {reference_detailed}

Reference gist: {reference_gist}
"""

JUDGE_MMLU_MATH = """\
# Instructions for Evaluating Math Problem Description Similarity to Math Topics

When evaluating how closely a submitted description matches the reference math topic, consider how well the description aligns with the mathematical domain and concepts typically covered under that topic.

## Rating Scale

1. Perfect Match (5/5): Description directly addresses the core mathematical concepts and methods central to the topic.
2. Strong Match (4/5): Description captures the main mathematical domain and most relevant concepts for the topic.
3. Moderate Match (3/5): Description relates to the topic but may be too broad, narrow, or miss some key conceptual areas.
4. Weak Match (2/5): Description only tangentially relates to the topic, touching on peripheral concepts.
5. No Match (1/5): Description addresses a completely different mathematical domain or unrelated concepts.

## Evaluation Process

1. Identify the core mathematical domain and key concepts typically associated with the reference topic
2. Consider the scope and typical applications within that mathematical area
3. Compare the submitted description against the expected conceptual coverage
4. Assign a rating based on how well the description aligns with the topic's mathematical focus

## Example Evaluation
Reference Topic Description: "Algebra"
Expected Core Concepts:

Algebraic expressions and equations
Variable manipulation and solving
Functions and their properties
Polynomial operations

Rating Examples:

Perfect (5/5): "Solving algebraic equations and working with variables to find unknown values"
Strong (4/5): "Problems involving equations and mathematical expressions with unknowns"
Moderate (3/5): "Mathematical problem-solving with symbols" (too broad, lacks specificity)
Weak (2/5): "Working with mathematical formulas" (vague, could apply to many areas)
No Match (1/5): "Calculating areas and perimeters of geometric shapes" (geometry, not algebra)

## Additional Considerations

Consider whether the description captures the appropriate level of mathematical sophistication for the topic
Look for key terminology and concepts that are characteristic of the mathematical domain
Evaluate if the scope is appropriately matched (not too broad or too narrow)

{output_spec}
Group description: {submission}

Reference topic: {reference_detailed}
"""

JUDGE_MMLU_HEALTH = """\
# Instructions for Evaluating Health Problem Description Similarity to Health Topics
When evaluating how closely a submitted description matches the reference health topic, consider how well the description aligns with the medical/health domain and concepts typically covered under that topic.

## Rating Scale

1. Perfect Match (5/5): Description directly addresses the core health concepts, medical principles, or clinical scenarios central to the topic.
2. Strong Match (4/5): Description captures the main health domain and most relevant concepts for the topic.
3. Moderate Match (3/5): Description relates to the topic but may be too broad, narrow, or miss some key clinical/health areas.
4. Weak Match (2/5): Description only tangentially relates to the topic, touching on peripheral health concepts.
5. No Match (1/5): Description addresses a completely different health domain or unrelated concepts.

## Evaluation Process

1. Identify the core health/medical domain and key concepts typically associated with the reference topic
2. Consider the scope and typical clinical applications within that health area
3. Compare the submitted description against the expected conceptual coverage
4. Assign a rating based on how well the description aligns with the topic's health/medical focus

Example Evaluation
Reference Topic: "Cardiology"
Expected Core Concepts:

Heart anatomy and physiology
Cardiovascular diseases and conditions
Diagnostic procedures (ECG, echocardiograms)
Treatment approaches and medications
Risk factors and prevention

## Rating Examples:

Perfect (5/5): "Diagnosing and treating heart conditions including arrhythmias and coronary artery disease"
Strong (4/5): "Medical problems related to heart function and cardiovascular health"
Moderate (3/5): "Health issues affecting the circulatory system" (too broad, lacks clinical specificity)
Weak (2/5): "Managing chronic health conditions" (vague, could apply to many specialties)
No Match (1/5): "Treating skin disorders and dermatological conditions" (dermatology, not cardiology)

## Additional Considerations

Consider whether the description captures the appropriate level of medical sophistication for the topic
Look for key terminology and concepts that are characteristic of the health domain
Evaluate if the scope appropriately matches clinical practice areas (not too broad or too narrow)
Consider both theoretical knowledge and practical clinical applications

{output_spec}
Group description: {submission}

Reference topic: {reference_detailed}
"""

JSON_REPAIR = "Return only valid JSON."
