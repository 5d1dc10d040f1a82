/* mini corpus file f17 */
int f17_value = 17;
